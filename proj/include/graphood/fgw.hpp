#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "graphood/graph.hpp"

namespace graphood::fgw {

/// Transport plan between two node-weight distributions.
struct Coupling {
    Matrix pi;
    double value = 0.0;  // objective at pi (linear cost for linear_ot, FGW objective otherwise)
    int iterations = 0;
    bool converged = true;
};

enum class OtSolver { exact, entropic };

struct FgwConfig {
    double alpha = 0.5;          // structure/feature trade-off
    int max_outer_iters = 200;   // conditional-gradient iterations
    double tol = 1e-7;           // relative objective-decrease tolerance
    OtSolver solver = OtSolver::exact;
    double entropic_epsilon = 0.05;
    int num_starts = 1;          // deterministic product-coupling start, then seeded random vertices
    std::uint64_t restart_seed = 9001;
};

namespace detail {

struct BasicCell {
    int i;
    int j;
    double flow;
};

// Classic transportation simplex: northwest-corner start, spanning-tree basis,
// most-negative-reduced-cost entering rule with a Bland fallback against
// degenerate cycling. Sizes here are desk scale, so the basis adjacency is
// rebuilt per pivot.
inline Coupling transport_simplex(const Matrix& cost, const Vector& mu1, const Vector& mu2) {
    const int m = static_cast<int>(mu1.size());
    const int n = static_cast<int>(mu2.size());

    std::vector<BasicCell> basis;
    basis.reserve(m + n - 1);
    {
        Vector ra = mu1, rb = mu2;
        int i = 0, j = 0;
        while (true) {
            const double f = std::min(ra(i), rb(j));
            basis.push_back({i, j, f});
            ra(i) -= f;
            rb(j) -= f;
            if (i == m - 1 && j == n - 1) break;
            if (j == n - 1) { ++i; continue; }
            if (i == m - 1) { ++j; continue; }
            if (ra(i) <= rb(j)) ++i; else ++j;
        }
    }

    const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    const int max_pivots = 2000 + 200 * (m + n);
    const int bland_after = max_pivots / 2;

    std::vector<double> u(m), v(n);
    std::vector<std::vector<int>> adj(m + n);  // node -> indices into basis
    std::vector<int> parent_node(m + n), parent_edge(m + n);

    int pivots = 0;
    while (true) {
        // Duals from the basis tree: u_i + v_j = C(i,j) on basic cells.
        for (auto& a : adj) a.clear();
        for (int e = 0; e < static_cast<int>(basis.size()); ++e) {
            adj[basis[e].i].push_back(e);
            adj[m + basis[e].j].push_back(e);
        }
        std::vector<char> seen(m + n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        u[0] = 0.0;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            for (const int e : adj[node]) {
                const auto& cell = basis[e];
                const int other = (node == cell.i) ? m + cell.j : cell.i;
                if (seen[other]) continue;
                seen[other] = 1;
                if (other >= m)
                    v[other - m] = cost(cell.i, cell.j) - u[cell.i];
                else
                    u[other] = cost(cell.i, cell.j) - v[node - m];
                stack.push_back(other);
            }
        }

        // Entering cell.
        int best_i = -1, best_j = -1;
        double best_r = -tol;
        const bool bland = pivots >= bland_after;
        for (int i = 0; i < m && (best_i < 0 || !bland); ++i) {
            for (int j = 0; j < n; ++j) {
                const double r = cost(i, j) - u[i] - v[j];
                if (r < best_r) {
                    best_r = r;
                    best_i = i;
                    best_j = j;
                    if (bland) break;
                }
            }
        }
        if (best_i < 0) break;  // optimal
        if (++pivots > max_pivots)
            throw std::runtime_error("transport_simplex: pivot limit exceeded");

        // Unique tree path from row node best_i to column node m+best_j.
        std::fill(parent_node.begin(), parent_node.end(), -1);
        std::vector<int> queue{best_i};
        parent_node[best_i] = best_i;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const int node = queue[q];
            for (const int e : adj[node]) {
                const auto& cell = basis[e];
                const int other = (node == cell.i) ? m + cell.j : cell.i;
                if (parent_node[other] >= 0) continue;
                parent_node[other] = node;
                parent_edge[other] = e;
                queue.push_back(other);
            }
        }

        // Walk back from m+best_j: edges alternate -,+,-,... starting at -.
        std::vector<int> path_edges;
        for (int node = m + best_j; node != best_i; node = parent_node[node])
            path_edges.push_back(parent_edge[node]);

        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (std::size_t k = 0; k < path_edges.size(); k += 2) {
            const auto& cell = basis[path_edges[k]];
            if (cell.flow < theta ||
                (cell.flow == theta && leaving >= 0 &&
                 (cell.i < basis[leaving].i ||
                  (cell.i == basis[leaving].i && cell.j < basis[leaving].j)))) {
                theta = cell.flow;
                leaving = path_edges[k];
            }
        }
        for (std::size_t k = 0; k < path_edges.size(); ++k)
            basis[path_edges[k]].flow += (k % 2 == 0) ? -theta : theta;
        basis[leaving] = {best_i, best_j, theta};
    }

    Coupling out;
    out.pi = Matrix::Zero(m, n);
    for (const auto& cell : basis) out.pi(cell.i, cell.j) = cell.flow;
    out.value = (cost.array() * out.pi.array()).sum();
    out.iterations = pivots;
    out.converged = true;
    return out;
}

// Log-domain Sinkhorn for the entropically regularized problem.
inline Coupling sinkhorn(const Matrix& cost, const Vector& mu1, const Vector& mu2, double epsilon,
                         int max_iters = 20000, double marginal_tol = 1e-10) {
    const Vector log_mu1 = mu1.array().log();
    const Vector log_mu2 = mu2.array().log();
    Vector f = Vector::Zero(mu1.size()), g = Vector::Zero(mu2.size());

    auto lse_rows = [](const Matrix& z) -> Vector {  // log-sum-exp over columns, per row
        Vector mx = z.rowwise().maxCoeff();
        return (mx.array() + ((z.colwise() - mx).array().exp().rowwise().sum()).log()).matrix();
    };
    auto potentials_matrix = [&]() -> Matrix {  // (f_i + g_j - C_ij)
        Matrix z = -cost;
        z.colwise() += f;
        z.rowwise() += g.transpose();
        return z;
    };

    int it = 0;
    bool converged = false;
    for (; it < max_iters; ++it) {
        // f-update fixes row marginals exactly, g-update fixes columns.
        f += epsilon * (log_mu1 - lse_rows(potentials_matrix() / epsilon));
        g += epsilon * (log_mu2 - lse_rows((potentials_matrix() / epsilon).transpose()));

        Matrix pi = (potentials_matrix() / epsilon).array().exp();
        const double row_err = (pi.rowwise().sum() - mu1).cwiseAbs().maxCoeff();
        if (row_err < marginal_tol) {
            converged = true;
            break;
        }
    }
    // Final f-update makes rows exact; column error is the converged residual.
    f += epsilon * (log_mu1 - lse_rows(potentials_matrix() / epsilon));
    Coupling out;
    out.pi = (potentials_matrix() / epsilon).array().exp();
    out.value = (cost.array() * out.pi.array()).sum();
    out.iterations = it;
    out.converged = converged;
    return out;
}

inline void check_marginals(const Matrix& cost, const Vector& mu1, const Vector& mu2) {
    if (cost.rows() != mu1.size() || cost.cols() != mu2.size())
        throw std::invalid_argument("linear_ot: cost shape does not match marginals");
    if (!cost.allFinite()) throw std::invalid_argument("linear_ot: cost must be finite");
    if ((mu1.array() <= 0.0).any() || (mu2.array() <= 0.0).any())
        throw std::invalid_argument("linear_ot: marginals must be strictly positive");
}

}  // namespace detail

/// Exact or entropic solution of min <cost, pi> over the transportation polytope.
inline Coupling linear_ot(const Matrix& cost, const Vector& mu1, const Vector& mu2,
                          OtSolver solver = OtSolver::exact, double entropic_epsilon = 0.05) {
    detail::check_marginals(cost, mu1, mu2);
    if (solver == OtSolver::exact) return detail::transport_simplex(cost, mu1, mu2);
    return detail::sinkhorn(cost, mu1, mu2, entropic_epsilon);
}

/// Squared-Euclidean feature cost matrix M(i,k) = ||X1(i) - X2(k)||^2.
inline Matrix feature_cost(const Matrix& x1, const Matrix& x2) {
    const Eigen::Index m = x1.rows(), n = x2.rows();
    Matrix cost(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index k = 0; k < n; ++k) cost(i, k) = (x1.row(i) - x2.row(k)).squaredNorm();
    return cost;
}

/// FGW objective at an arbitrary plan pi, exactly equal to the quadruple sum
///   sum_{ijkl} [alpha (A1(i,j)-A2(k,l))^2 + (1-alpha) ||X1(i)-X2(k)||^2] pi_ik pi_jl.
inline double fgw_objective(const Graph& g1, const Graph& g2, const Matrix& pi, double alpha) {
    const Matrix m_cost = feature_cost(g1.features, g2.features);
    const Vector r = pi.rowwise().sum();
    const Vector c = pi.colwise().sum().transpose();
    const double mass = pi.sum();
    const double feat = (m_cost.array() * pi.array()).sum() * mass;
    const double sq1 = r.dot(g1.adjacency.array().square().matrix() * r);
    const double sq2 = c.dot(g2.adjacency.array().square().matrix() * c);
    const double cross = (pi.array() * (g1.adjacency * pi * g2.adjacency).array()).sum();
    return (1.0 - alpha) * feat + alpha * (sq1 + sq2 - 2.0 * cross);
}

struct FgwResult {
    double value = 0.0;
    Coupling coupling;
    std::vector<double> objective_history;
    int outer_iterations = 0;
    bool converged = false;
};

namespace detail {

inline FgwResult fgw_from_start(const Graph& g1, const Graph& g2, const FgwConfig& cfg,
                                const Matrix& m_cost, Matrix pi) {
    const Matrix& a1 = g1.adjacency;
    const Matrix& a2 = g2.adjacency;
    const Vector& mu1 = g1.node_weights;
    const Vector& mu2 = g2.node_weights;
    const double alpha = cfg.alpha;

    // constC(i,k) = sum_j A1(i,j)^2 mu1(j) + sum_l A2(k,l)^2 mu2(l)
    const Vector c1 = a1.array().square().matrix() * mu1;
    const Vector c2 = a2.array().square().matrix() * mu2;
    Matrix const_c = c1.replicate(1, g2.n);
    const_c.rowwise() += c2.transpose();

    FgwResult res;
    double obj = fgw_objective(g1, g2, pi, alpha);
    res.objective_history.push_back(obj);

    int iter = 0;
    for (; iter < cfg.max_outer_iters; ++iter) {
        Matrix grad = (1.0 - alpha) * m_cost + (2.0 * alpha) * const_c;
        grad.noalias() -= (4.0 * alpha) * (a1 * pi * a2);

        Coupling vertex = linear_ot(grad, mu1, mu2, cfg.solver, cfg.entropic_epsilon);
        const Matrix dir = vertex.pi - pi;

        const double b = (grad.array() * dir.array()).sum();
        const double a = -2.0 * alpha * (dir.array() * (a1 * dir * a2).array()).sum();

        // Exact minimizer of the 1-D quadratic a*t^2 + b*t on [0,1].
        double step;
        if (a > 1e-18) {
            step = std::clamp(-b / (2.0 * a), 0.0, 1.0);
        } else {
            step = (a + b < 0.0) ? 1.0 : 0.0;
        }
        const double predicted = a * step * step + b * step;
        if (step <= 0.0 || predicted > -cfg.tol * std::max(1.0, std::abs(obj))) break;

        pi += step * dir;
        const double next = fgw_objective(g1, g2, pi, alpha);
        res.objective_history.push_back(next);
        const double decrease = obj - next;
        obj = next;
        if (decrease <= cfg.tol * std::max(1.0, std::abs(obj))) {
            ++iter;
            break;
        }
    }

    res.value = std::max(obj, 0.0);
    res.outer_iterations = iter;
    res.converged = iter < cfg.max_outer_iters;
    res.coupling.pi = std::move(pi);
    res.coupling.value = res.value;
    res.coupling.iterations = iter;
    res.coupling.converged = res.converged;
    return res;
}

}  // namespace detail

/// Fused Gromov-Wasserstein distance via conditional gradient with exact
/// line search. Non-convex objective: the result is a local minimum from a
/// deterministic product-coupling start (plus optional seeded vertex restarts).
inline FgwResult fgw_distance(const Graph& g1, const Graph& g2, const FgwConfig& cfg = {}) {
    if (g1.feature_dim() != g2.feature_dim())
        throw std::invalid_argument("fgw_distance: feature dimensions differ");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
        throw std::invalid_argument("fgw_distance: alpha must be in [0,1]");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("fgw_distance: tol must be positive");

    const Matrix m_cost = feature_cost(g1.features, g2.features);
    FgwResult best =
        detail::fgw_from_start(g1, g2, cfg, m_cost, g1.node_weights * g2.node_weights.transpose());

    Rng rng(cfg.restart_seed);
    for (int s = 1; s < cfg.num_starts; ++s) {
        const Matrix random_cost = gaussian_matrix(rng, g1.n, g2.n);
        Coupling vertex = linear_ot(random_cost, g1.node_weights, g2.node_weights);
        FgwResult cand = detail::fgw_from_start(g1, g2, cfg, m_cost, std::move(vertex.pi));
        if (cand.value < best.value) best = std::move(cand);
    }
    return best;
}

/// Gradient of the FGW objective with respect to the first graph, holding the
/// coupling fixed (envelope theorem):
///   dA1(i,j) = 2 alpha sum_{kl} (A1(i,j) - A2(k,l)) pi_ik pi_jl
///   dX1(i)   = 2 (1-alpha) sum_k (X1(i) - X2(k)) pi_ik
struct FgwGradient {
    Matrix d_adjacency;
    Matrix d_features;
};

inline FgwGradient fgw_gradient(const Graph& g1, const Graph& g2, const Coupling& coupling,
                                double alpha) {
    const Matrix& pi = coupling.pi;
    if (pi.rows() != g1.n || pi.cols() != g2.n)
        throw std::invalid_argument("fgw_gradient: coupling shape mismatch");
    const Vector r = pi.rowwise().sum();
    FgwGradient grad;
    grad.d_adjacency =
        2.0 * alpha * (g1.adjacency.cwiseProduct(r * r.transpose()) - pi * g2.adjacency * pi.transpose());
    grad.d_features = 2.0 * (1.0 - alpha) * (r.asDiagonal() * g1.features - pi * g2.features);
    return grad;
}

/// Bounded similarity transform 1 / (1 + FGW distance), in (0, 1].
inline double similarity(const Graph& g1, const Graph& g2, const FgwConfig& cfg = {}) {
    return 1.0 / (1.0 + fgw_distance(g1, g2, cfg).value);
}

inline double similarity_from_distance(double distance) { return 1.0 / (1.0 + distance); }

}  // namespace graphood::fgw
