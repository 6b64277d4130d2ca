#pragma once

#include <fstream>
#include <span>
#include <vector>

#include "graphood/corpus_io.hpp"
#include "graphood/fgw.hpp"
#include "graphood/proxy.hpp"

namespace graphood::proto {

struct PrototypeConfig {
    int batch_size = 128;  // scaled down automatically for smaller corpora
    double fgw_alpha = 0.5;
    double t_perturb = 0.3;
    double guidance_scale = 1.0;      // 1.0 keeps the plain guided-reverse drift
    int guidance_refresh_every = 1;   // recompute couplings every k-th step
    fgw::OtSolver ot_solver = fgw::OtSolver::exact;
    double entropic_epsilon = 0.05;
    proxy::PerturbConfig perturb;
    std::uint64_t seed = 19;
    bool use_loss_id = true;   // ablation switch
    bool use_loss_ood = true;  // ablation switch

    fgw::FgwConfig fgw_config() const {
        fgw::FgwConfig cfg;
        cfg.alpha = fgw_alpha;
        cfg.solver = ot_solver;
        cfg.entropic_epsilon = entropic_epsilon;
        return cfg;
    }
};

/// Mean FGW distance from the candidate prototype to an ID batch.
inline double loss_id(const std::vector<Graph>& batch, const Graph& gbar, double fgw_alpha) {
    if (batch.empty()) throw std::invalid_argument("loss_id: empty batch");
    fgw::FgwConfig cfg;
    cfg.alpha = fgw_alpha;
    double total = 0.0;
    for (const Graph& g : batch) total += fgw::fgw_distance(gbar, g, cfg).value;
    return total / static_cast<double>(batch.size());
}

/// Negative mean FGW distance to the proxy-OOD set.
inline double loss_ood(const std::vector<Graph>& proxies, const Graph& gbar, double fgw_alpha) {
    if (proxies.empty()) throw std::invalid_argument("loss_ood: empty proxy list");
    return -loss_id(proxies, gbar, fgw_alpha);
}

struct GuideLoss {
    double total = 0.0;
    double id_term = 0.0;
    double ood_term = 0.0;
    Matrix grad_adjacency;  // symmetric, zero diagonal
    Matrix grad_features;
};

/// Composite guide loss loss_id + loss_ood with its gradient at gbar,
/// couplings held fixed per term (envelope theorem). The adjacency gradient
/// lives on the off-diagonal entries; the diagonal is pinned at zero.
inline GuideLoss guide_loss(const std::vector<Graph>& batch, const std::vector<Graph>& proxies,
                            const Graph& gbar, const PrototypeConfig& cfg) {
    if (cfg.use_loss_id && batch.empty()) throw std::invalid_argument("guide_loss: empty batch");
    if (cfg.use_loss_ood && proxies.empty())
        throw std::invalid_argument("guide_loss: empty proxy list");

    const fgw::FgwConfig fcfg = cfg.fgw_config();
    GuideLoss out;
    out.grad_adjacency = Matrix::Zero(gbar.n, gbar.n);
    out.grad_features = Matrix::Zero(gbar.n, gbar.feature_dim());

    auto accumulate = [&](const std::vector<Graph>& graphs, double sign, double& term) {
        const double scale = sign / static_cast<double>(graphs.size());
        for (const Graph& g : graphs) {
            const auto res = fgw::fgw_distance(gbar, g, fcfg);
            const auto grad = fgw::fgw_gradient(gbar, g, res.coupling, fcfg.alpha);
            term += scale * res.value;
            out.grad_adjacency += scale * grad.d_adjacency;
            out.grad_features += scale * grad.d_features;
        }
    };
    if (cfg.use_loss_id) accumulate(batch, 1.0, out.id_term);
    if (cfg.use_loss_ood) accumulate(proxies, -1.0, out.ood_term);

    out.grad_adjacency.diagonal().setZero();
    out.total = out.id_term + out.ood_term;
    return out;
}

struct PrototypeRun {
    Graph prototype;  // discrete
    std::vector<std::pair<double, double>> loss_history;  // (loss_id, loss_ood) per refresh
    std::size_t start_index = 0;
};

/// One guided reverse run (Algorithm: noise a randomly chosen batch graph,
/// then denoise with the score shifted by -grad L_guide, refreshed every
/// cfg.guidance_refresh_every steps).
inline PrototypeRun generate_prototype(const std::vector<Graph>& batch,
                                       const std::vector<Graph>& proxies,
                                       const diffusion::ScoreNetParams& params,
                                       const diffusion::SdeConfig& sde,
                                       const PrototypeConfig& cfg, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("generate_prototype: empty batch");
    if (cfg.use_loss_ood && proxies.empty())
        throw std::invalid_argument("generate_prototype: empty proxy list");
    if (!(cfg.t_perturb > 0.0 && cfg.t_perturb <= 1.0))
        throw std::invalid_argument("generate_prototype: t_perturb must be in (0,1]");

    PrototypeRun run;
    run.start_index = uniform_index(rng, batch.size());
    Graph state = diffusion::forward_diffuse(batch[run.start_index], cfg.t_perturb, sde, rng);

    diffusion::Guidance cached;
    const int refresh = std::max(1, cfg.guidance_refresh_every);
    auto guidance = [&](const Graph& g_t, double, int step) -> std::optional<diffusion::Guidance> {
        if (cfg.guidance_scale == 0.0 || (!cfg.use_loss_id && !cfg.use_loss_ood))
            return std::nullopt;
        if (step % refresh == 0) {
            const GuideLoss gl = guide_loss(batch, proxies, g_t, cfg);
            run.loss_history.emplace_back(gl.id_term, gl.ood_term);
            cached.d_adjacency = cfg.guidance_scale * gl.grad_adjacency;
            cached.d_features = cfg.guidance_scale * gl.grad_features;
        }
        return cached;
    };

    Graph relaxed = diffusion::integrate_reverse(std::move(state), cfg.t_perturb, params, sde,
                                                 rng, guidance);
    run.prototype = quantize_adjacency(relaxed);
    return run;
}

/// Ordered list of generated prototypes with generation metadata.
struct PrototypeList {
    std::vector<Graph> prototypes;
    double fgw_alpha = 0.5;
    int batch_size = 128;  // effective batch size used
    std::uint64_t seed = 0;
    std::uint64_t perturb_seed = 0;
    std::vector<std::vector<std::pair<double, double>>> histories;

    int count() const { return static_cast<int>(prototypes.size()); }
};

/// Full list construction: one proxy set, then one prototype per consecutive
/// training batch. count() == ceil(|corpus| / effective batch size).
inline PrototypeList build_prototype_list(const Corpus& corpus,
                                          const diffusion::ScoreNetParams& params,
                                          const diffusion::SdeConfig& sde,
                                          const PrototypeConfig& cfg) {
    if (corpus.empty()) throw std::invalid_argument("build_prototype_list: empty corpus");
    if (corpus.role != CorpusRole::train_id)
        throw std::invalid_argument("build_prototype_list: corpus role must be train_id");
    if (cfg.batch_size < 1) throw std::invalid_argument("build_prototype_list: batch_size >= 1");

    const std::size_t total = corpus.size();
    const std::size_t batch =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), total);
    const std::size_t count = (total + batch - 1) / batch;

    std::vector<Eigen::Index> size_pool;
    size_pool.reserve(total);
    for (const Graph& g : corpus.graphs) size_pool.push_back(g.n);

    Rng proxy_rng(cfg.perturb.seed);
    const std::vector<Graph> proxies =
        generate_ood_proxies(params, cfg.perturb, sde, size_pool, proxy_rng);

    PrototypeList pl;
    pl.fgw_alpha = cfg.fgw_alpha;
    pl.batch_size = static_cast<int>(batch);
    pl.seed = cfg.seed;
    pl.perturb_seed = cfg.perturb.seed;

    for (std::size_t b = 0; b < count; ++b) {
        const std::size_t lo = b * batch;
        const std::size_t hi = std::min(total, lo + batch);
        const std::vector<Graph> slice(corpus.graphs.begin() + lo, corpus.graphs.begin() + hi);
        Rng batch_rng(cfg.seed + 1000003ULL * (b + 1));
        PrototypeRun run = generate_prototype(slice, proxies, params, sde, cfg, batch_rng);
        run.prototype.id = "proto-" + std::to_string(b);
        pl.prototypes.push_back(std::move(run.prototype));
        pl.histories.push_back(std::move(run.loss_history));
    }
    return pl;
}

// PL files: one JSON header line, then prototypes in the corpus line format.
inline void save_prototype_list(const std::string& path, const PrototypeList& pl) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    nlohmann::ordered_json header;
    header["format_version"] = 1;
    header["count"] = pl.count();
    header["fgw_alpha"] = pl.fgw_alpha;
    header["batch_size"] = pl.batch_size;
    header["seeds"] = {pl.seed, pl.perturb_seed};
    out << header.dump() << '\n';
    for (const Graph& g : pl.prototypes) out << graph_record(g).dump() << '\n';
}

inline PrototypeList load_prototype_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open prototype file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("prototype file is empty: " + path);
    const auto header = nlohmann::json::parse(line);
    PrototypeList pl;
    pl.fgw_alpha = header.at("fgw_alpha").get<double>();
    pl.batch_size = header.at("batch_size").get<int>();
    pl.seed = header.at("seeds").at(0).get<std::uint64_t>();
    pl.perturb_seed = header.at("seeds").at(1).get<std::uint64_t>();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        pl.prototypes.push_back(detail::graph_from_record(nlohmann::json::parse(line), line_no));
    }
    if (pl.count() != header.at("count").get<int>())
        throw std::runtime_error("prototype file: count mismatch with header");
    return pl;
}

}  // namespace graphood::proto
