#pragma once

#include <string>
#include <vector>

#include "graphood/graph.hpp"

namespace graphood::synth {

enum class GraphFamily { erdos_renyi, ring_lattice };

/// One synthetic graph family: a structure model plus a Gaussian feature
/// cluster with mean feature_mean * 1 and variance feature_var * I.
struct FamilyConfig {
    GraphFamily kind = GraphFamily::erdos_renyi;
    int n_min = 6;
    int n_max = 10;
    double edge_prob = 0.25;  // erdos_renyi only
    int ring_neighbors = 1;   // ring_lattice: links to the k nearest on each side
    double feature_mean = 0.0;
    double feature_var = 1.0;
};

struct SynthConfig {
    FamilyConfig id_family;
    FamilyConfig ood_family;
    int train_count = 256;
    int test_id_count = 100;
    int test_ood_count = 100;
    Eigen::Index feature_dim = 4;
    std::uint64_t seed = 7;
};

struct SynthDataset {
    Corpus train_id;
    Corpus test_id;
    Corpus test_ood;
};

inline void check_family(const FamilyConfig& f) {
    if (f.n_min < 1 || f.n_max < f.n_min)
        throw std::invalid_argument("synth: node-count range is empty");
    if (f.kind == GraphFamily::erdos_renyi && !(f.edge_prob >= 0.0 && f.edge_prob <= 1.0))
        throw std::invalid_argument("synth: edge probability must be in [0,1]");
    if (f.kind == GraphFamily::ring_lattice) {
        if (f.ring_neighbors < 1) throw std::invalid_argument("synth: ring_neighbors must be >= 1");
        if (f.n_min < 3) throw std::invalid_argument("synth: ring lattice needs at least 3 nodes");
    }
    if (!(f.feature_var > 0.0)) throw std::invalid_argument("synth: feature variance must be positive");
}

inline Graph erdos_renyi(Rng& rng, Eigen::Index n, double p, Matrix features, std::string id) {
    std::vector<std::pair<int, int>> edges;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (uniform_real(rng, 0.0, 1.0) < p) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return graph_from_edges(n, edges, std::move(features), std::move(id));
}

inline Graph ring_lattice(Eigen::Index n, int neighbors, Matrix features, std::string id) {
    std::vector<std::pair<int, int>> edges;
    for (Eigen::Index i = 0; i < n; ++i)
        for (int k = 1; k <= neighbors; ++k) {
            const Eigen::Index j = (i + k) % n;
            const auto lo = static_cast<int>(std::min(i, j));
            const auto hi = static_cast<int>(std::max(i, j));
            if (lo != hi) edges.emplace_back(lo, hi);
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return graph_from_edges(n, edges, std::move(features), std::move(id));
}

inline Matrix cluster_features(Rng& rng, Eigen::Index n, Eigen::Index d, double mean, double var) {
    return Matrix::Constant(n, d, mean) + gaussian_matrix(rng, n, d, std::sqrt(var));
}

inline Graph draw_graph(Rng& rng, const FamilyConfig& f, Eigen::Index d, std::string id) {
    std::uniform_int_distribution<int> size_dist(f.n_min, f.n_max);
    const Eigen::Index n = size_dist(rng);
    Matrix x = cluster_features(rng, n, d, f.feature_mean, f.feature_var);
    if (f.kind == GraphFamily::erdos_renyi) return erdos_renyi(rng, n, f.edge_prob, std::move(x), std::move(id));
    return ring_lattice(n, f.ring_neighbors, std::move(x), std::move(id));
}

inline Corpus draw_corpus(Rng& rng, const FamilyConfig& f, int count, Eigen::Index d,
                          CorpusRole role, const std::string& id_prefix) {
    Corpus corpus;
    corpus.role = role;
    corpus.feature_dim = d;
    corpus.graphs.reserve(count);
    for (int i = 0; i < count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%06d", i);
        corpus.graphs.push_back(draw_graph(rng, f, d, id_prefix + buf));
    }
    return corpus;
}

/// Deterministic ID/OOD splits: train and test-ID from the ID family,
/// test-OOD from the OOD family, with split-disjoint graph ids.
inline SynthDataset synth_dataset(const SynthConfig& cfg) {
    check_family(cfg.id_family);
    check_family(cfg.ood_family);
    if (cfg.train_count < 1 || cfg.test_id_count < 1 || cfg.test_ood_count < 1)
        throw std::invalid_argument("synth: split counts must be >= 1");
    if (cfg.feature_dim < 1) throw std::invalid_argument("synth: feature_dim must be >= 1");

    Rng rng(cfg.seed);
    SynthDataset out;
    out.train_id = draw_corpus(rng, cfg.id_family, cfg.train_count, cfg.feature_dim,
                               CorpusRole::train_id, "train-id-");
    out.test_id = draw_corpus(rng, cfg.id_family, cfg.test_id_count, cfg.feature_dim,
                              CorpusRole::test_id, "test-id-");
    out.test_ood = draw_corpus(rng, cfg.ood_family, cfg.test_ood_count, cfg.feature_dim,
                               CorpusRole::test_ood, "test-ood-");
    return out;
}

/// The in-repo reference benchmark: structure shift (random graphs vs ring
/// lattices) combined with a feature-cluster shift.
inline SynthConfig reference_benchmark(std::uint64_t seed = 7) {
    SynthConfig cfg;
    cfg.id_family = {GraphFamily::erdos_renyi, 6, 10, 0.25, 1, 1.0, 0.25};
    cfg.ood_family = {GraphFamily::ring_lattice, 6, 10, 0.25, 1, -1.0, 0.25};
    cfg.train_count = 256;
    cfg.test_id_count = 100;
    cfg.test_ood_count = 100;
    cfg.feature_dim = 4;
    cfg.seed = seed;
    return cfg;
}

}  // namespace graphood::synth
