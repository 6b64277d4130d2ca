#pragma once

#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "graphood/common.hpp"

namespace graphood {

enum class GraphForm { relaxed, discrete };

enum class CorpusRole { train_id, test_id, test_ood };

/// Attributed graph in transport format: adjacency, node features and a
/// node-weight vector on the probability simplex. Adjacency is symmetric with
/// a zero diagonal; discrete graphs carry {0,1} entries, relaxed ones carry
/// arbitrary reals (intermediate diffusion states live outside [0,1]).
struct Graph {
    Eigen::Index n = 0;
    Matrix adjacency;
    Matrix features;
    Vector node_weights;
    std::string id;
    GraphForm form = GraphForm::discrete;

    Eigen::Index feature_dim() const { return features.cols(); }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < violations.size(); ++i) {
            if (i) os << "; ";
            os << violations[i];
        }
        return os.str();
    }
};

/// Uniform node-weight vector 1/n on the simplex.
inline Vector uniform_weights(Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("uniform_weights: node count must be positive");
    return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

inline ValidationReport validate(const Graph& g) {
    ValidationReport report;
    auto add = [&](const std::string& msg) { report.violations.push_back(msg); };

    if (g.n < 1) add("node count must be positive");
    if (g.adjacency.rows() != g.n || g.adjacency.cols() != g.n)
        add("adjacency must be n x n");
    if (g.features.rows() != g.n) add("features must have exactly n rows");
    if (g.node_weights.size() != g.n) add("node_weights must have length n");
    if (!report.ok()) return report;  // shape errors make the rest meaningless

    if (!g.adjacency.allFinite()) add("adjacency has non-finite entries");
    if (!g.features.allFinite()) add("features have non-finite entries");
    for (Eigen::Index i = 0; i < g.n; ++i) {
        if (g.adjacency(i, i) != 0.0) {
            add("adjacency diagonal must be zero");
            break;
        }
    }
    bool symmetric = true;
    for (Eigen::Index i = 0; i < g.n && symmetric; ++i)
        for (Eigen::Index j = i + 1; j < g.n; ++j)
            if (g.adjacency(i, j) != g.adjacency(j, i)) {
                symmetric = false;
                break;
            }
    if (!symmetric) add("adjacency must be symmetric");

    const double wsum = g.node_weights.sum();
    if (std::abs(wsum - 1.0) > 1e-12) add("node_weights must sum to 1");
    if ((g.node_weights.array() <= 0.0).any()) add("node_weights entries must be positive");
    return report;
}

/// Build a discrete graph from an undirected edge list (pairs with i < j).
inline Graph graph_from_edges(Eigen::Index n,
                              const std::vector<std::pair<int, int>>& edges,
                              Matrix features,
                              std::string id = {}) {
    if (n < 1) throw std::invalid_argument("graph_from_edges: node count must be positive");
    Graph g;
    g.n = n;
    g.adjacency = Matrix::Zero(n, n);
    for (const auto& [i, j] : edges) {
        if (i < 0 || j < 0 || i >= n || j >= n)
            throw std::invalid_argument("graph_from_edges: edge index out of range");
        if (i == j) throw std::invalid_argument("graph_from_edges: self-loops are not allowed");
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
    }
    g.features = std::move(features);
    if (g.features.rows() != n)
        throw std::invalid_argument("graph_from_edges: features must have n rows");
    g.node_weights = uniform_weights(n);
    g.id = std::move(id);
    g.form = GraphForm::discrete;
    return g;
}

/// Threshold a relaxed adjacency into {0,1}, symmetrizing by the upper
/// triangle and forcing a zero diagonal. Features pass through unchanged.
inline Graph quantize_adjacency(const Graph& g, double threshold = 0.5) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("quantize_adjacency: threshold must be in (0,1)");
    Graph out = g;
    out.adjacency = Matrix::Zero(g.n, g.n);
    for (Eigen::Index i = 0; i < g.n; ++i)
        for (Eigen::Index j = i + 1; j < g.n; ++j)
            if (g.adjacency(i, j) >= threshold) {
                out.adjacency(i, j) = 1.0;
                out.adjacency(j, i) = 1.0;
            }
    out.form = GraphForm::discrete;
    return out;
}

/// Relabel nodes by a permutation: node i of the output is node perm[i] of
/// the input.
inline Graph permute_graph(const Graph& g, const std::vector<Eigen::Index>& perm) {
    if (static_cast<Eigen::Index>(perm.size()) != g.n)
        throw std::invalid_argument("permute_graph: permutation size mismatch");
    Graph out = g;
    for (Eigen::Index i = 0; i < g.n; ++i) {
        out.features.row(i) = g.features.row(perm[i]);
        out.node_weights(i) = g.node_weights(perm[i]);
        for (Eigen::Index j = 0; j < g.n; ++j) out.adjacency(i, j) = g.adjacency(perm[i], perm[j]);
    }
    return out;
}

inline std::vector<std::pair<int, int>> edge_list(const Graph& g, double threshold = 0.5) {
    std::vector<std::pair<int, int>> edges;
    for (Eigen::Index i = 0; i < g.n; ++i)
        for (Eigen::Index j = i + 1; j < g.n; ++j)
            if (g.adjacency(i, j) >= threshold) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return edges;
}

inline double edge_density(const Graph& g) {
    if (g.n < 2) return 0.0;
    const double pairs = 0.5 * static_cast<double>(g.n) * static_cast<double>(g.n - 1);
    double count = 0.0;
    for (Eigen::Index i = 0; i < g.n; ++i)
        for (Eigen::Index j = i + 1; j < g.n; ++j)
            if (g.adjacency(i, j) >= 0.5) count += 1.0;
    return count / pairs;
}

/// Ordered collection of graphs sharing one feature dimension.
struct Corpus {
    std::vector<Graph> graphs;
    CorpusRole role = CorpusRole::train_id;
    Eigen::Index feature_dim = 0;

    std::size_t size() const { return graphs.size(); }
    bool empty() const { return graphs.empty(); }
};

inline const char* role_name(CorpusRole role) {
    switch (role) {
        case CorpusRole::train_id: return "train_id";
        case CorpusRole::test_id: return "test_id";
        case CorpusRole::test_ood: return "test_ood";
    }
    return "unknown";
}

}  // namespace graphood
