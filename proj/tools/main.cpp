// graphood: OOD detection on attributed graphs via diffusion-reconstructed
// prototypes and Fused Gromov-Wasserstein similarity scoring.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"

#include "graphood/experiment.hpp"

using namespace graphood;

namespace {

config::Table preload_config(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string_view(argv[i]) == "--config") return config::load(argv[i + 1]);
    return {};
}

Graph first_graph(const std::string& path) {
    const Corpus corpus = load_corpus(path, CorpusRole::test_id);
    if (corpus.empty()) throw std::runtime_error("no graphs in " + path);
    return corpus.graphs.front();
}

int run_synth(const exp::ExperimentConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto data = synth::synth_dataset(cfg.dataset);
    const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    save_corpus(path("train_id.jsonl"), data.train_id);
    save_corpus(path("test_id.jsonl"), data.test_id);
    save_corpus(path("test_ood.jsonl"), data.test_ood);
    Corpus all = data.test_id;
    std::vector<std::optional<int>> labels(all.graphs.size(), 1);
    for (const Graph& g : data.test_ood.graphs) {
        all.graphs.push_back(g);
        labels.emplace_back(0);
    }
    save_corpus(path("test_all.jsonl"), all, &labels);
    std::printf("wrote %zu train / %zu test-id / %zu test-ood graphs to %s\n",
                data.train_id.size(), data.test_id.size(), data.test_ood.size(), out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph OOD detection via diffusion-reconstructed prototypes"};
    app.require_subcommand(1);

    config::Table table;
    try {
        table = preload_config(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::string config_path;

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "draw a synthetic ID/OOD benchmark");
    std::string out_dir = table.get_string("output.dir", "out");
    std::int64_t synth_seed = table.get_int("dataset.seed", 7);
    synth_cmd->add_option("--config", config_path, "config file");
    synth_cmd->add_option("--out-dir", out_dir, "output directory");
    synth_cmd->add_option("--seed", synth_seed, "dataset seed");

    // pretrain
    auto* pre_cmd = app.add_subcommand("pretrain", "train the diffusion score network");
    std::string corpus_path, out_path;
    std::int64_t steps = table.get_int("pretrain.steps", 3000);
    std::int64_t seed = table.get_int("pretrain.seed", 11);
    std::int64_t hidden = table.get_int("pretrain.hidden", 32);
    double lr = table.get_double("pretrain.lr", 5e-3);
    double beta_min = table.get_double("sde.beta_min", 0.1);
    double beta_max = table.get_double("sde.beta_max", 20.0);
    std::int64_t num_steps = table.get_int("sde.num_steps", 100);
    pre_cmd->add_option("--config", config_path, "config file");
    pre_cmd->add_option("--corpus", corpus_path, "training corpus")->required();
    pre_cmd->add_option("--out", out_path, "weights output file")->required();
    pre_cmd->add_option("--steps", steps, "training steps");
    pre_cmd->add_option("--seed", seed, "training seed");
    pre_cmd->add_option("--hidden", hidden, "hidden width");
    pre_cmd->add_option("--lr", lr, "learning rate");
    pre_cmd->add_option("--beta-min", beta_min, "SDE beta at t=0");
    pre_cmd->add_option("--beta-max", beta_max, "SDE beta at t=1");
    pre_cmd->add_option("--num-steps", num_steps, "reverse integration steps");

    // encoder
    auto* enc_cmd = app.add_subcommand("encoder", "train the message-passing encoder");
    std::int64_t epochs = table.get_int("encoder.epochs", 200);
    std::int64_t enc_layers = table.get_int("encoder.layers", 3);
    std::int64_t enc_hidden = table.get_int("encoder.hidden", 32);
    double enc_lr = table.get_double("encoder.lr", 1e-2);
    std::int64_t enc_seed = table.get_int("encoder.seed", 13);
    enc_cmd->add_option("--config", config_path, "config file");
    enc_cmd->add_option("--corpus", corpus_path, "training corpus")->required();
    enc_cmd->add_option("--out", out_path, "encoder output file")->required();
    enc_cmd->add_option("--epochs", epochs, "training epochs");
    enc_cmd->add_option("--layers", enc_layers, "message-passing layers");
    enc_cmd->add_option("--hidden", enc_hidden, "hidden width");
    enc_cmd->add_option("--lr", enc_lr, "learning rate");
    enc_cmd->add_option("--seed", enc_seed, "training seed");

    // prototypes
    auto* proto_cmd = app.add_subcommand("prototypes", "build the prototype list");
    std::string weights_path, dump_proxies_path;
    std::int64_t batch_size = table.get_int("prototypes.batch_size", 128);
    double fgw_alpha = table.get_double("prototypes.fgw_alpha", 0.5);
    double perturb_strength = table.get_double("proxies.strength", 0.5);
    std::int64_t proxy_count = table.get_int("proxies.count", 64);
    std::int64_t proxy_seed = table.get_int("proxies.seed", 17);
    double t_perturb = table.get_double("prototypes.t_perturb", 0.3);
    double guidance_scale = table.get_double("prototypes.guidance_scale", 1.0);
    std::int64_t refresh_every = table.get_int("prototypes.refresh_every", 1);
    std::int64_t proto_seed = table.get_int("prototypes.seed", 19);
    proto_cmd->add_option("--config", config_path, "config file");
    proto_cmd->add_option("--weights", weights_path, "score-net weights")->required();
    proto_cmd->add_option("--corpus", corpus_path, "training corpus")->required();
    proto_cmd->add_option("--batch-size", batch_size, "graphs per prototype batch");
    proto_cmd->add_option("--fgw-alpha", fgw_alpha, "FGW structure/feature trade-off");
    proto_cmd->add_option("--perturb-strength", perturb_strength, "proxy perturbation strength");
    proto_cmd->add_option("--proxy-count", proxy_count, "number of OOD proxies");
    proto_cmd->add_option("--proxy-seed", proxy_seed, "proxy generation seed");
    proto_cmd->add_option("--t-perturb", t_perturb, "noise level for the guided start");
    proto_cmd->add_option("--guidance-scale", guidance_scale, "guide-gradient multiplier");
    proto_cmd->add_option("--refresh-every", refresh_every, "guidance recompute cadence");
    proto_cmd->add_option("--out", out_path, "prototype list output")->required();
    proto_cmd->add_option("--seed", proto_seed, "generation seed");
    proto_cmd->add_option("--dump-proxies", dump_proxies_path, "also write proxies as a corpus");

    // detect (PGR)
    auto* detect_cmd = app.add_subcommand("detect", "score a corpus against the prototype list");
    std::string pl_path, scores_path;
    double detect_alpha = table.get_double("detect.fgw_alpha", 0.5);
    double entropic_eps = 0.0;
    double tau = std::numeric_limits<double>::quiet_NaN();
    detect_cmd->add_option("--config", config_path, "config file");
    detect_cmd->add_option("--prototypes", pl_path, "prototype list file")->required();
    detect_cmd->add_option("--corpus", corpus_path, "test corpus")->required();
    detect_cmd->add_option("--fgw-alpha", detect_alpha, "FGW trade-off");
    detect_cmd->add_option("--entropic", entropic_eps, "use entropic OT at this epsilon");
    detect_cmd->add_option("--tau", tau, "print ID/OOD verdicts at this threshold");
    detect_cmd->add_option("--out", scores_path, "scores CSV output")->required();

    // detect-gr (baseline)
    auto* gr_cmd = app.add_subcommand("detect-gr", "reconstruction-baseline scoring");
    std::string encoder_path;
    double gr_t_perturb = table.get_double("detect.t_perturb", 0.3);
    std::int64_t gr_seed = table.get_int("detect.seed", 23);
    gr_cmd->add_option("--config", config_path, "config file");
    gr_cmd->add_option("--weights", weights_path, "score-net weights")->required();
    gr_cmd->add_option("--encoder", encoder_path, "encoder weights")->required();
    gr_cmd->add_option("--corpus", corpus_path, "test corpus")->required();
    gr_cmd->add_option("--t-perturb", gr_t_perturb, "perturbation level");
    gr_cmd->add_option("--seed", gr_seed, "scoring seed");
    gr_cmd->add_option("--out", scores_path, "scores CSV output")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "compute detection metrics from scores");
    std::string labels_path, report_path;
    eval_cmd->add_option("--scores", scores_path, "scores CSV")->required();
    eval_cmd->add_option("--labels", labels_path, "labeled corpus supplying ground truth")
        ->required();
    eval_cmd->add_option("--out", report_path, "metrics report output")->required();

    // fgw
    auto* fgw_cmd = app.add_subcommand("fgw", "FGW distance between two graphs");
    std::string g1_path, g2_path;
    double alpha = 0.5;
    double fgw_entropic = 0.0;
    bool print_coupling = false;
    fgw_cmd->add_option("graph1", g1_path, "first graph file")->required();
    fgw_cmd->add_option("graph2", g2_path, "second graph file")->required();
    fgw_cmd->add_option("--alpha", alpha, "structure/feature trade-off");
    fgw_cmd->add_option("--entropic", fgw_entropic, "use entropic OT at this epsilon");
    fgw_cmd->add_flag("--coupling", print_coupling, "also print the transport plan");

    // run
    auto* run_cmd = app.add_subcommand("run", "full pipeline from a config file");
    run_cmd->add_option("--config", config_path, "config file")->required();
    run_cmd->add_option("--out-dir", out_dir, "output directory override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            exp::ExperimentConfig cfg = exp::config_from_table(table);
            cfg.dataset.seed = static_cast<std::uint64_t>(synth_seed);
            return run_synth(cfg, out_dir);
        }
        if (*pre_cmd) {
            const Corpus corpus = load_corpus(corpus_path, CorpusRole::train_id);
            diffusion::SdeConfig sde{beta_min, beta_max, static_cast<int>(num_steps)};
            diffusion::ScoreTrainConfig cfg;
            cfg.steps = static_cast<int>(steps);
            cfg.learning_rate = lr;
            cfg.hidden_dim = hidden;
            const auto result =
                diffusion::train_score_net(corpus, sde, cfg, static_cast<std::uint64_t>(seed));
            io::save_score_net(out_path, result.params, sde);
            double tail = 0.0;
            const int window = static_cast<int>(std::min<std::size_t>(100, result.loss_history.size()));
            for (int i = 0; i < window; ++i)
                tail += result.loss_history[result.loss_history.size() - 1 - i];
            std::printf("trained %lld steps on %zu graphs; last-%d mean DSM loss %.4f\n",
                        static_cast<long long>(steps), corpus.size(), window, tail / window);
            std::printf("wrote %s\n", out_path.c_str());
            return 0;
        }
        if (*enc_cmd) {
            const Corpus corpus = load_corpus(corpus_path, CorpusRole::train_id);
            gnn::EncoderTrainConfig cfg;
            cfg.epochs = static_cast<int>(epochs);
            cfg.num_layers = static_cast<int>(enc_layers);
            cfg.hidden_dim = enc_hidden;
            cfg.learning_rate = enc_lr;
            const auto result =
                gnn::train_encoder(corpus, cfg, static_cast<std::uint64_t>(enc_seed));
            io::save_encoder(out_path, result.params);
            std::printf("encoder loss %.4f -> %.4f over %lld epochs; wrote %s\n",
                        result.initial_loss, result.final_loss,
                        static_cast<long long>(epochs), out_path.c_str());
            return 0;
        }
        if (*proto_cmd) {
            const auto weights = io::load_score_net(weights_path);
            const Corpus corpus = load_corpus(corpus_path, CorpusRole::train_id);
            proto::PrototypeConfig cfg;
            cfg.batch_size = static_cast<int>(batch_size);
            cfg.fgw_alpha = fgw_alpha;
            cfg.t_perturb = t_perturb;
            cfg.guidance_scale = guidance_scale;
            cfg.guidance_refresh_every = static_cast<int>(refresh_every);
            cfg.perturb.strength = perturb_strength;
            cfg.perturb.proxy_count = static_cast<int>(proxy_count);
            cfg.perturb.seed = static_cast<std::uint64_t>(proxy_seed);
            cfg.seed = static_cast<std::uint64_t>(proto_seed);
            const auto pl = proto::build_prototype_list(corpus, weights.params, weights.sde, cfg);
            proto::save_prototype_list(out_path, pl);
            std::printf("built %d prototypes (batch size %d); wrote %s\n", pl.count(),
                        pl.batch_size, out_path.c_str());
            if (!dump_proxies_path.empty()) {
                std::vector<Eigen::Index> sizes;
                for (const Graph& g : corpus.graphs) sizes.push_back(g.n);
                Rng proxy_rng(cfg.perturb.seed);
                const auto proxies = proxy::generate_ood_proxies(weights.params, cfg.perturb,
                                                                 weights.sde, sizes, proxy_rng);
                Corpus proxy_corpus;
                proxy_corpus.role = CorpusRole::test_ood;
                proxy_corpus.feature_dim = corpus.feature_dim;
                proxy_corpus.graphs = proxies;
                save_corpus(dump_proxies_path, proxy_corpus);
                std::printf("dumped %zu proxies to %s\n", proxies.size(),
                            dump_proxies_path.c_str());
            }
            return 0;
        }
        if (*detect_cmd) {
            const auto pl = proto::load_prototype_list(pl_path);
            const Corpus corpus = load_corpus(corpus_path, CorpusRole::test_id);
            fgw::FgwConfig fcfg;
            fcfg.alpha = detect_alpha;
            if (detect_cmd->count("--entropic")) {
                fcfg.solver = fgw::OtSolver::entropic;
                fcfg.entropic_epsilon = entropic_eps;
            }
            std::vector<detect::JudgeScore> scores;
            for (const Graph& g : corpus.graphs) {
                scores.push_back(detect::judge_score_pgr(g, pl, fcfg));
                if (!std::isnan(tau)) {
                    const auto verdict = detect::threshold_detect(scores.back(), tau);
                    std::printf("%s: %s\n", g.id.c_str(),
                                verdict == detect::Verdict::ID ? "ID" : "OOD");
                }
            }
            detect::save_scores(scores_path, scores);
            std::printf("scored %zu graphs with %d prototypes; wrote %s\n", scores.size(),
                        pl.count(), scores_path.c_str());
            return 0;
        }
        if (*gr_cmd) {
            const auto weights = io::load_score_net(weights_path);
            const auto encoder = io::load_encoder(encoder_path);
            const Corpus corpus = load_corpus(corpus_path, CorpusRole::test_id);
            std::vector<detect::JudgeScore> scores;
            std::uint64_t index = 0;
            for (const Graph& g : corpus.graphs) {
                Rng rng(static_cast<std::uint64_t>(gr_seed) + 7919 * ++index);
                scores.push_back(detect::judge_score_gr(g, weights.params, encoder, weights.sde,
                                                        gr_t_perturb, rng));
            }
            detect::save_scores(scores_path, scores);
            std::printf("scored %zu graphs via reconstruction; wrote %s\n", scores.size(),
                        scores_path.c_str());
            return 0;
        }
        if (*eval_cmd) {
            const auto scores = detect::load_scores(scores_path);
            const auto labeled = load_labeled_corpus(labels_path, CorpusRole::test_id);
            std::map<std::string, int> label_by_id;
            for (std::size_t i = 0; i < labeled.corpus.graphs.size(); ++i) {
                if (!labeled.labels[i])
                    throw std::runtime_error("graph " + labeled.corpus.graphs[i].id +
                                             " carries no label");
                label_by_id[labeled.corpus.graphs[i].id] = *labeled.labels[i];
            }
            std::map<std::string, metrics::DetectionResult> by_method;
            for (const auto& j : scores) {
                const auto it = label_by_id.find(j.graph_id);
                if (it == label_by_id.end())
                    throw std::runtime_error("no label for graph " + j.graph_id);
                auto& r = by_method[j.method];
                r.method = j.method;
                r.scores.push_back(j.score);
                r.labels.push_back(it->second);
            }
            nlohmann::ordered_json doc;
            for (auto& [method, result] : by_method) {
                const auto m = metrics::compute_metrics(result);
                doc[method] = {{"auroc", m.auroc}, {"aupr", m.aupr}, {"fpr95", m.fpr95}};
                std::printf("%s: auroc %.4f  aupr %.4f  fpr95 %.4f  (%zu scores)\n",
                            method.c_str(), m.auroc, m.aupr, m.fpr95, result.scores.size());
            }
            std::ofstream out(report_path);
            if (!out) throw std::runtime_error("cannot open " + report_path);
            out << doc.dump(2) << '\n';
            return 0;
        }
        if (*fgw_cmd) {
            const Graph g1 = first_graph(g1_path);
            const Graph g2 = first_graph(g2_path);
            fgw::FgwConfig fcfg;
            fcfg.alpha = alpha;
            if (fgw_cmd->count("--entropic")) {
                fcfg.solver = fgw::OtSolver::entropic;
                fcfg.entropic_epsilon = fgw_entropic;
            }
            const auto res = fgw::fgw_distance(g1, g2, fcfg);
            std::printf("fgw_distance = %.12g\n", res.value);
            std::printf("similarity = %.12g\n", fgw::similarity_from_distance(res.value));
            std::printf("outer_iterations = %d, converged = %s\n", res.outer_iterations,
                        res.converged ? "true" : "false");
            if (print_coupling) {
                nlohmann::ordered_json rows = nlohmann::ordered_json::array();
                for (Eigen::Index i = 0; i < res.coupling.pi.rows(); ++i) {
                    auto row = nlohmann::ordered_json::array();
                    for (Eigen::Index j = 0; j < res.coupling.pi.cols(); ++j)
                        row.push_back(res.coupling.pi(i, j));
                    rows.push_back(std::move(row));
                }
                std::printf("coupling = %s\n", rows.dump().c_str());
            }
            return 0;
        }
        if (*run_cmd) {
            exp::ExperimentConfig cfg = exp::config_from_table(config::load(config_path));
            if (run_cmd->count("--out-dir")) cfg.out_dir = out_dir;
            const auto report = exp::run_experiment(cfg);
            std::printf("pgr:         auroc %.4f  aupr %.4f  fpr95 %.4f  score_gap %.4f\n",
                        report.pgr.metrics.auroc, report.pgr.metrics.aupr,
                        report.pgr.metrics.fpr95, report.pgr.score_gap);
            std::printf("gr_baseline: auroc %.4f  aupr %.4f  fpr95 %.4f  score_gap %.4f\n",
                        report.gr.metrics.auroc, report.gr.metrics.aupr, report.gr.metrics.fpr95,
                        report.gr.score_gap);
            std::printf("phases (s): dataset %.2f pretrain %.2f encoder %.2f prototypes %.2f "
                        "pgr-scoring %.2f gr-scoring %.2f\n",
                        report.phases.dataset_s, report.phases.pretrain_s,
                        report.phases.encoder_s, report.phases.prototypes_s,
                        report.phases.scoring_pgr_s, report.phases.scoring_gr_s);
            std::printf("artifacts in %s\n", cfg.out_dir.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
