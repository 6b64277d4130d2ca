#pragma once

#include <filesystem>

#include "graphood/config.hpp"
#include "graphood/detector.hpp"
#include "graphood/synth.hpp"
#include "graphood/weights_io.hpp"

namespace graphood::exp {

struct ExperimentConfig {
    synth::SynthConfig dataset = synth::reference_benchmark();
    std::string train_corpus_path;  // when set, corpora are loaded, not drawn
    std::string test_id_corpus_path;
    std::string test_ood_corpus_path;
    bool standardize_features = false;

    diffusion::SdeConfig sde{0.1, 20.0, 60};
    diffusion::ScoreTrainConfig pretrain;
    std::uint64_t pretrain_seed = 11;

    gnn::EncoderTrainConfig encoder;
    std::uint64_t encoder_seed = 13;

    proto::PrototypeConfig prototypes;

    double detect_fgw_alpha = 0.5;
    double detect_t_perturb = 0.3;
    std::uint64_t detect_seed = 23;

    std::string out_dir = "out";
};

inline synth::FamilyConfig family_from_table(const config::Table& t, const std::string& prefix,
                                             const synth::FamilyConfig& defaults) {
    synth::FamilyConfig f = defaults;
    const std::string kind = t.get_string(prefix + ".kind", f.kind == synth::GraphFamily::erdos_renyi
                                                                ? "erdos_renyi"
                                                                : "ring_lattice");
    if (kind == "erdos_renyi")
        f.kind = synth::GraphFamily::erdos_renyi;
    else if (kind == "ring_lattice")
        f.kind = synth::GraphFamily::ring_lattice;
    else
        throw config::ConfigError("unknown graph family: " + kind);
    f.n_min = static_cast<int>(t.get_int(prefix + ".n_min", f.n_min));
    f.n_max = static_cast<int>(t.get_int(prefix + ".n_max", f.n_max));
    f.edge_prob = t.get_double(prefix + ".edge_prob", f.edge_prob);
    f.ring_neighbors = static_cast<int>(t.get_int(prefix + ".ring_neighbors", f.ring_neighbors));
    f.feature_mean = t.get_double(prefix + ".feature_mean", f.feature_mean);
    f.feature_var = t.get_double(prefix + ".feature_var", f.feature_var);
    return f;
}

inline ExperimentConfig config_from_table(const config::Table& t) {
    ExperimentConfig cfg;
    cfg.dataset.seed = static_cast<std::uint64_t>(t.get_int("dataset.seed", 7));
    cfg.dataset.feature_dim = t.get_int("dataset.feature_dim", 4);
    cfg.dataset.train_count = static_cast<int>(t.get_int("dataset.train_count", 256));
    cfg.dataset.test_id_count = static_cast<int>(t.get_int("dataset.test_id_count", 100));
    cfg.dataset.test_ood_count = static_cast<int>(t.get_int("dataset.test_ood_count", 100));
    cfg.dataset.id_family = family_from_table(t, "dataset.id_family", cfg.dataset.id_family);
    cfg.dataset.ood_family = family_from_table(t, "dataset.ood_family", cfg.dataset.ood_family);
    cfg.train_corpus_path = t.get_string("dataset.train_corpus", "");
    cfg.test_id_corpus_path = t.get_string("dataset.test_id_corpus", "");
    cfg.test_ood_corpus_path = t.get_string("dataset.test_ood_corpus", "");
    cfg.standardize_features = t.get_bool("dataset.standardize_features", false);

    cfg.sde.beta_min = t.get_double("sde.beta_min", cfg.sde.beta_min);
    cfg.sde.beta_max = t.get_double("sde.beta_max", cfg.sde.beta_max);
    cfg.sde.num_steps = static_cast<int>(t.get_int("sde.num_steps", cfg.sde.num_steps));

    cfg.pretrain.steps = static_cast<int>(t.get_int("pretrain.steps", cfg.pretrain.steps));
    cfg.pretrain.learning_rate = t.get_double("pretrain.lr", cfg.pretrain.learning_rate);
    cfg.pretrain.hidden_dim = t.get_int("pretrain.hidden", cfg.pretrain.hidden_dim);
    cfg.pretrain_seed = static_cast<std::uint64_t>(t.get_int("pretrain.seed", 11));

    cfg.encoder.num_layers = static_cast<int>(t.get_int("encoder.layers", cfg.encoder.num_layers));
    cfg.encoder.hidden_dim = t.get_int("encoder.hidden", cfg.encoder.hidden_dim);
    cfg.encoder.epochs = static_cast<int>(t.get_int("encoder.epochs", cfg.encoder.epochs));
    cfg.encoder.learning_rate = t.get_double("encoder.lr", cfg.encoder.learning_rate);
    cfg.encoder_seed = static_cast<std::uint64_t>(t.get_int("encoder.seed", 13));

    cfg.prototypes.batch_size =
        static_cast<int>(t.get_int("prototypes.batch_size", cfg.prototypes.batch_size));
    cfg.prototypes.fgw_alpha = t.get_double("prototypes.fgw_alpha", cfg.prototypes.fgw_alpha);
    cfg.prototypes.t_perturb = t.get_double("prototypes.t_perturb", cfg.prototypes.t_perturb);
    cfg.prototypes.guidance_scale =
        t.get_double("prototypes.guidance_scale", cfg.prototypes.guidance_scale);
    cfg.prototypes.guidance_refresh_every = static_cast<int>(
        t.get_int("prototypes.refresh_every", cfg.prototypes.guidance_refresh_every));
    cfg.prototypes.seed = static_cast<std::uint64_t>(t.get_int("prototypes.seed", 19));
    cfg.prototypes.use_loss_id = t.get_bool("prototypes.use_loss_id", true);
    cfg.prototypes.use_loss_ood = t.get_bool("prototypes.use_loss_ood", true);
    cfg.prototypes.perturb.strength =
        t.get_double("proxies.strength", cfg.prototypes.perturb.strength);
    cfg.prototypes.perturb.proxy_count =
        static_cast<int>(t.get_int("proxies.count", cfg.prototypes.perturb.proxy_count));
    cfg.prototypes.perturb.seed = static_cast<std::uint64_t>(t.get_int("proxies.seed", 17));

    cfg.detect_fgw_alpha = t.get_double("detect.fgw_alpha", 0.5);
    cfg.detect_t_perturb = t.get_double("detect.t_perturb", 0.3);
    cfg.detect_seed = static_cast<std::uint64_t>(t.get_int("detect.seed", 23));

    cfg.out_dir = t.get_string("output.dir", "out");
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    return config_from_table(config::load(path));
}

struct PhaseTimings {
    double dataset_s = 0.0;
    double pretrain_s = 0.0;
    double encoder_s = 0.0;
    double prototypes_s = 0.0;
    double scoring_pgr_s = 0.0;
    double scoring_gr_s = 0.0;
    double eval_s = 0.0;
};

struct MethodReport {
    metrics::MetricValues metrics;
    double score_gap = 0.0;
};

struct ExperimentReport {
    MethodReport pgr;
    MethodReport gr;
    PhaseTimings phases;
    int train_count = 0;
    int test_id_count = 0;
    int test_ood_count = 0;
    int prototype_count = 0;
};

struct PipelineArtifacts {
    synth::SynthDataset data;
    diffusion::ScoreNetParams score_params;
    gnn::EncoderParams encoder_params;
    proto::PrototypeList prototype_list;
    std::vector<detect::JudgeScore> pgr_scores;  // test_id then test_ood order
    std::vector<detect::JudgeScore> gr_scores;
    metrics::DetectionResult pgr_result;
    metrics::DetectionResult gr_result;
    ExperimentReport report;
};

namespace detail {

struct PhaseTimer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double stop() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

template <typename Fn>
auto phase(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("[") + name + "] " + e.what());
    }
}

/// Z-score all corpora with statistics fitted on the training corpus.
inline void standardize(synth::SynthDataset& data) {
    const Eigen::Index d = data.train_id.feature_dim;
    Vector mean = Vector::Zero(d), var = Vector::Zero(d);
    std::size_t rows = 0;
    for (const Graph& g : data.train_id.graphs) {
        mean += g.features.colwise().sum().transpose();
        rows += static_cast<std::size_t>(g.n);
    }
    mean /= static_cast<double>(rows);
    for (const Graph& g : data.train_id.graphs)
        var += (g.features.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
    var /= static_cast<double>(rows);
    const Vector scale = (var.array() + 1e-12).sqrt().inverse().matrix();
    for (Corpus* c : {&data.train_id, &data.test_id, &data.test_ood})
        for (Graph& g : c->graphs)
            g.features = (g.features.rowwise() - mean.transpose()) * scale.asDiagonal();
}

}  // namespace detail

/// Full training-then-testing pipeline in memory: draw or load corpora,
/// pretrain the score net, train the encoder, build the prototype list, and
/// score the test split with both judges.
inline PipelineArtifacts run_pipeline(const ExperimentConfig& cfg) {
    PipelineArtifacts art;

    detail::PhaseTimer t_data;
    art.data = detail::phase("dataset", [&] {
        if (!cfg.train_corpus_path.empty()) {
            synth::SynthDataset data;
            data.train_id = load_corpus(cfg.train_corpus_path, CorpusRole::train_id);
            data.test_id = load_corpus(cfg.test_id_corpus_path, CorpusRole::test_id);
            data.test_ood = load_corpus(cfg.test_ood_corpus_path, CorpusRole::test_ood);
            return data;
        }
        return synth::synth_dataset(cfg.dataset);
    });
    if (cfg.standardize_features) detail::standardize(art.data);
    art.report.phases.dataset_s = t_data.stop();
    art.report.train_count = static_cast<int>(art.data.train_id.size());
    art.report.test_id_count = static_cast<int>(art.data.test_id.size());
    art.report.test_ood_count = static_cast<int>(art.data.test_ood.size());

    detail::PhaseTimer t_pretrain;
    art.score_params = detail::phase("pretrain", [&] {
        return diffusion::train_score_net(art.data.train_id, cfg.sde, cfg.pretrain,
                                          cfg.pretrain_seed)
            .params;
    });
    art.report.phases.pretrain_s = t_pretrain.stop();

    detail::PhaseTimer t_encoder;
    art.encoder_params = detail::phase("encoder", [&] {
        return gnn::train_encoder(art.data.train_id, cfg.encoder, cfg.encoder_seed).params;
    });
    art.report.phases.encoder_s = t_encoder.stop();

    detail::PhaseTimer t_proto;
    art.prototype_list = detail::phase("prototypes", [&] {
        return proto::build_prototype_list(art.data.train_id, art.score_params, cfg.sde,
                                           cfg.prototypes);
    });
    art.report.phases.prototypes_s = t_proto.stop();
    art.report.prototype_count = art.prototype_list.count();

    fgw::FgwConfig fcfg;
    fcfg.alpha = cfg.detect_fgw_alpha;

    detail::PhaseTimer t_pgr;
    detail::phase("scoring-pgr", [&] {
        for (const Corpus* c : {&art.data.test_id, &art.data.test_ood}) {
            const int label = c == &art.data.test_id ? 1 : 0;
            for (const Graph& g : c->graphs) {
                auto j = detect::judge_score_pgr(g, art.prototype_list, fcfg);
                art.pgr_result.scores.push_back(j.score);
                art.pgr_result.labels.push_back(label);
                art.pgr_scores.push_back(std::move(j));
            }
        }
        return 0;
    });
    art.report.phases.scoring_pgr_s = t_pgr.stop();
    art.pgr_result.method = "pgr";

    detail::PhaseTimer t_gr;
    detail::phase("scoring-gr", [&] {
        std::uint64_t index = 0;
        for (const Corpus* c : {&art.data.test_id, &art.data.test_ood}) {
            const int label = c == &art.data.test_id ? 1 : 0;
            for (const Graph& g : c->graphs) {
                Rng rng(cfg.detect_seed + 7919 * ++index);
                auto j = detect::judge_score_gr(g, art.score_params, art.encoder_params, cfg.sde,
                                                cfg.detect_t_perturb, rng);
                art.gr_result.scores.push_back(j.score);
                art.gr_result.labels.push_back(label);
                art.gr_scores.push_back(std::move(j));
            }
        }
        return 0;
    });
    art.report.phases.scoring_gr_s = t_gr.stop();
    art.gr_result.method = "gr_baseline";

    detail::PhaseTimer t_eval;
    detail::phase("eval", [&] {
        art.report.pgr.metrics = metrics::compute_metrics(art.pgr_result);
        art.report.gr.metrics = metrics::compute_metrics(art.gr_result);
        auto gap = [](const metrics::DetectionResult& r) {
            std::vector<double> id, ood;
            for (std::size_t i = 0; i < r.scores.size(); ++i)
                (r.labels[i] == 1 ? id : ood).push_back(r.scores[i]);
            return metrics::score_gap(id, ood);
        };
        art.report.pgr.score_gap = gap(art.pgr_result);
        art.report.gr.score_gap = gap(art.gr_result);
        return 0;
    });
    art.report.phases.eval_s = t_eval.stop();
    return art;
}

inline nlohmann::ordered_json report_to_json(const ExperimentReport& r) {
    nlohmann::ordered_json doc;
    doc["counts"] = {{"train", r.train_count},
                     {"test_id", r.test_id_count},
                     {"test_ood", r.test_ood_count},
                     {"prototypes", r.prototype_count}};
    auto method = [](const MethodReport& m) {
        return nlohmann::ordered_json{{"auroc", m.metrics.auroc},
                                      {"aupr", m.metrics.aupr},
                                      {"fpr95", m.metrics.fpr95},
                                      {"score_gap", m.score_gap}};
    };
    doc["methods"] = {{"pgr", method(r.pgr)}, {"gr_baseline", method(r.gr)}};
    doc["phases_s"] = {{"dataset", r.phases.dataset_s},       {"pretrain", r.phases.pretrain_s},
                       {"encoder", r.phases.encoder_s},       {"prototypes", r.phases.prototypes_s},
                       {"scoring_pgr", r.phases.scoring_pgr_s}, {"scoring_gr", r.phases.scoring_gr_s},
                       {"eval", r.phases.eval_s}};
    return doc;
}

/// Judge-score histogram as CSV bins: bin_lo,bin_hi,count_id,count_ood.
inline void write_histogram(const std::string& path, const metrics::DetectionResult& r,
                            int bins = 20) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    double lo = *std::min_element(r.scores.begin(), r.scores.end());
    double hi = *std::max_element(r.scores.begin(), r.scores.end());
    if (hi <= lo) hi = lo + 1e-9;
    const double width = (hi - lo) / bins;
    std::vector<long> count_id(bins, 0), count_ood(bins, 0);
    for (std::size_t i = 0; i < r.scores.size(); ++i) {
        int b = static_cast<int>((r.scores[i] - lo) / width);
        b = std::clamp(b, 0, bins - 1);
        (r.labels[i] == 1 ? count_id : count_ood)[b]++;
    }
    out << "bin_lo,bin_hi,count_id,count_ood\n";
    char buf[64];
    for (int b = 0; b < bins; ++b) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g", lo + b * width, lo + (b + 1) * width);
        out << buf << ',' << count_id[b] << ',' << count_ood[b] << '\n';
    }
}

/// Run the pipeline and write every artifact into cfg.out_dir.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const auto path = [&](const char* name) { return (fs::path(cfg.out_dir) / name).string(); };

    PipelineArtifacts art = run_pipeline(cfg);

    detail::phase("write-artifacts", [&] {
        save_corpus(path("train_id.jsonl"), art.data.train_id);
        save_corpus(path("test_id.jsonl"), art.data.test_id);
        save_corpus(path("test_ood.jsonl"), art.data.test_ood);
        Corpus all = art.data.test_id;
        std::vector<std::optional<int>> labels(all.graphs.size(), 1);
        for (const Graph& g : art.data.test_ood.graphs) {
            all.graphs.push_back(g);
            labels.emplace_back(0);
        }
        save_corpus(path("test_all.jsonl"), all, &labels);

        io::save_score_net(path("weights.json"), art.score_params, cfg.sde);
        io::save_encoder(path("encoder.json"), art.encoder_params);
        proto::save_prototype_list(path("prototypes.jsonl"), art.prototype_list);
        detect::save_scores(path("scores_pgr.csv"), art.pgr_scores);
        detect::save_scores(path("scores_gr.csv"), art.gr_scores);
        write_histogram(path("histogram_pgr.csv"), art.pgr_result);
        write_histogram(path("histogram_gr.csv"), art.gr_result);

        std::ofstream report(path("report.json"));
        report << report_to_json(art.report).dump(2) << '\n';
        return 0;
    });
    return art.report;
}

}  // namespace graphood::exp
