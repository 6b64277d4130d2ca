#pragma once

// Independent reference implementations used to check the library. Everything
// here is deliberately brute force and shares no code path with the solvers
// under test.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "graphood/graph.hpp"

namespace oracles {

using graphood::Graph;
using graphood::Matrix;
using graphood::Vector;

/// FGW objective as the literal quadruple sum.
inline double fgw_objective_brute(const Graph& g1, const Graph& g2, const Matrix& pi,
                                  double alpha) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < g1.n; ++i)
        for (Eigen::Index j = 0; j < g1.n; ++j)
            for (Eigen::Index k = 0; k < g2.n; ++k)
                for (Eigen::Index l = 0; l < g2.n; ++l) {
                    const double structural = g1.adjacency(i, j) - g2.adjacency(k, l);
                    const double feat = (g1.features.row(i) - g2.features.row(k)).squaredNorm();
                    total += (alpha * structural * structural + (1.0 - alpha) * feat) *
                             pi(i, k) * pi(j, l);
                }
    return total;
}

/// Global FGW minimum for a pair of 2-node graphs with uniform weights: the
/// coupling polytope is the 1-parameter family
///   pi(s) = [[s, 0.5-s], [0.5-s, s]],  s in [0, 0.5],
/// scanned on a grid.
inline double fgw_two_node_grid(const Graph& g1, const Graph& g2, double alpha,
                                double resolution = 1e-4) {
    double best = std::numeric_limits<double>::infinity();
    Matrix pi(2, 2);
    for (double s = 0.0; s <= 0.5 + 1e-12; s += resolution) {
        const double sc = std::min(s, 0.5);
        pi << sc, 0.5 - sc, 0.5 - sc, sc;
        best = std::min(best, fgw_objective_brute(g1, g2, pi, alpha));
    }
    return best;
}

/// Minimum of a linear objective over couplings with uniform marginals of
/// equal size, by enumerating the permutation vertices of the Birkhoff
/// polytope scaled by 1/n.
inline double linear_ot_permutation_min(const Matrix& cost) {
    const Eigen::Index n = cost.rows();
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double value = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) value += cost(i, perm[i]);
        best = std::min(best, value / static_cast<double>(n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// AUROC by exhaustive pair counting with ties worth one half.
inline double auroc_pair_counting(const std::vector<double>& scores,
                                  const std::vector<int>& labels) {
    std::int64_t wins = 0, ties = 0, pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                ++wins;
            else if (scores[i] == scores[j])
                ++ties;
        }
    }
    return static_cast<double>(2 * wins + ties) / static_cast<double>(2 * pairs);
}

/// Check |expected - actual| against a relative tolerance with an absolute floor.
inline bool close_rel(double expected, double actual, double rel, double abs_floor = 1e-9) {
    return std::abs(expected - actual) <= std::max(abs_floor, rel * std::abs(expected));
}

inline Graph random_graph(graphood::Rng& rng, Eigen::Index n, Eigen::Index d, double p,
                          const std::string& id = "rnd") {
    std::vector<std::pair<int, int>> edges;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (graphood::uniform_real(rng, 0.0, 1.0) < p)
                edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    Matrix x = graphood::gaussian_matrix(rng, n, d);
    return graphood::graph_from_edges(n, edges, std::move(x), id);
}

}  // namespace oracles
