#include <catch2/catch_amalgamated.hpp>

#include "graphood/fgw.hpp"
#include "oracles.hpp"

using namespace graphood;
using fgw::FgwConfig;

namespace {

Graph one_node_graph(double feature, const std::string& id) {
    Matrix x(1, 1);
    x(0, 0) = feature;
    return graph_from_edges(1, {}, x, id);
}

Graph two_node_graph(bool edge, double f0, double f1, const std::string& id) {
    Matrix x(2, 1);
    x << f0, f1;
    std::vector<std::pair<int, int>> edges;
    if (edge) edges.emplace_back(0, 1);
    return graph_from_edges(2, edges, x, id);
}

}  // namespace

TEST_CASE("linear_ot exact solves hand cases") {
    Vector mu = Vector::Constant(2, 0.5);

    Matrix cost(2, 2);
    cost << 0, 1, 1, 0;
    auto plan = fgw::linear_ot(cost, mu, mu);
    REQUIRE(plan.value == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(plan.pi(0, 0) == Catch::Approx(0.5));
    REQUIRE(plan.pi(1, 1) == Catch::Approx(0.5));

    Matrix one(1, 1);
    one << 1.0;
    Vector unit = Vector::Ones(1);
    plan = fgw::linear_ot(one, unit, unit);
    REQUIRE(plan.pi(0, 0) == Catch::Approx(1.0));
    REQUIRE(plan.value == Catch::Approx(1.0));
}

TEST_CASE("linear_ot exact matches the permutation-vertex oracle") {
    Rng rng(33);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index n = 3 + trial % 3;
        const Matrix cost = gaussian_matrix(rng, n, n);
        const Vector mu = uniform_weights(n);
        const auto plan = fgw::linear_ot(cost, mu, mu);
        const double oracle = oracles::linear_ot_permutation_min(cost);
        REQUIRE(plan.value == Catch::Approx(oracle).margin(1e-10));
    }
}

TEST_CASE("linear_ot enforces marginals and rejects degenerate ones") {
    Rng rng(34);
    const Matrix cost = gaussian_matrix(rng, 4, 6);
    Vector mu1(4), mu2(6);
    mu1 << 0.1, 0.4, 0.2, 0.3;
    mu2 << 0.1, 0.1, 0.2, 0.2, 0.25, 0.15;

    for (auto solver : {fgw::OtSolver::exact, fgw::OtSolver::entropic}) {
        const auto plan = fgw::linear_ot(cost, mu1, mu2, solver, 0.1);
        REQUIRE((plan.pi.rowwise().sum() - mu1).cwiseAbs().maxCoeff() < 1e-8);
        REQUIRE((plan.pi.colwise().sum().transpose() - mu2).cwiseAbs().maxCoeff() < 1e-8);
        REQUIRE((plan.pi.array() >= 0.0).all());
    }

    Vector bad = mu1;
    bad(0) = 0.0;
    bad(1) = 0.5;
    REQUIRE_THROWS_AS(fgw::linear_ot(cost, bad, mu2), std::invalid_argument);
}

TEST_CASE("sinkhorn approaches the exact optimum as epsilon shrinks") {
    Rng rng(35);
    const Matrix cost = gaussian_matrix(rng, 5, 5).array().abs();
    const Vector mu = uniform_weights(5);
    const auto exact = fgw::linear_ot(cost, mu, mu);
    const auto coarse = fgw::linear_ot(cost, mu, mu, fgw::OtSolver::entropic, 0.2);
    const auto fine = fgw::linear_ot(cost, mu, mu, fgw::OtSolver::entropic, 0.05);
    REQUIRE(coarse.converged);
    REQUIRE(fine.converged);
    REQUIRE(fine.value >= exact.value - 1e-9);
    REQUIRE(fine.value - exact.value < coarse.value - exact.value);
    REQUIRE(fine.value - exact.value < 0.05);
}

TEST_CASE("fgw self-distance is zero with an identity-like coupling") {
    Rng rng(40);
    const Graph g = oracles::random_graph(rng, 6, 3, 0.4);
    for (double alpha : {0.0, 0.5, 1.0}) {
        FgwConfig cfg;
        cfg.alpha = alpha;
        const auto res = fgw::fgw_distance(g, g, cfg);
        REQUIRE(res.value <= 1e-9);
    }
}

TEST_CASE("fgw forced coupling between 1-node graphs") {
    const Graph g1 = one_node_graph(0.0, "a");
    const Graph g2 = one_node_graph(3.0, "b");
    FgwConfig cfg;
    cfg.alpha = 0.5;
    const auto res = fgw::fgw_distance(g1, g2, cfg);
    REQUIRE(res.value == Catch::Approx(4.5).margin(1e-12));
    REQUIRE(res.coupling.pi(0, 0) == Catch::Approx(1.0));
}

TEST_CASE("fgw matches the 1-D grid oracle on 2-node pairs") {
    std::vector<Graph> pool;
    int idx = 0;
    for (bool edge : {false, true})
        for (double f0 : {0.0, 1.0})
            for (double f1 : {0.0, 1.0})
                pool.push_back(two_node_graph(edge, f0, f1, "p" + std::to_string(idx++)));

    for (double alpha : {0.0, 0.5, 1.0}) {
        FgwConfig cfg;
        cfg.alpha = alpha;
        for (const Graph& g1 : pool)
            for (const Graph& g2 : pool) {
                const auto res = fgw::fgw_distance(g1, g2, cfg);
                const double oracle = oracles::fgw_two_node_grid(g1, g2, alpha);
                INFO("alpha=" << alpha << " g1=" << g1.id << " g2=" << g2.id);
                REQUIRE(std::abs(res.value - oracle) < 1e-4);
            }
    }
}

TEST_CASE("fgw objective value agrees with the brute-force quadruple sum") {
    Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const Graph g1 = oracles::random_graph(rng, 4, 2, 0.5, "x");
        const Graph g2 = oracles::random_graph(rng, 5, 2, 0.5, "y");
        FgwConfig cfg;
        cfg.alpha = 0.3;
        const auto res = fgw::fgw_distance(g1, g2, cfg);
        const double brute = oracles::fgw_objective_brute(g1, g2, res.coupling.pi, cfg.alpha);
        REQUIRE(res.value == Catch::Approx(brute).margin(1e-10));
    }
}

TEST_CASE("fgw is symmetric and vanishes on permuted copies") {
    Rng rng(42);
    FgwConfig cfg;
    cfg.alpha = 0.5;
    for (int trial = 0; trial < 12; ++trial) {
        const Eigen::Index n = 3 + trial % 6;
        const Graph g1 = oracles::random_graph(rng, n, 3, 0.4, "s1");
        const Graph g2 = oracles::random_graph(rng, 3 + (trial * 7) % 6, 3, 0.4, "s2");
        const double d12 = fgw::fgw_distance(g1, g2, cfg).value;
        const double d21 = fgw::fgw_distance(g2, g1, cfg).value;
        REQUIRE(std::abs(d12 - d21) <= 1e-6);

        std::vector<Eigen::Index> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const Graph gp = permute_graph(g1, perm);
        REQUIRE(fgw::fgw_distance(g1, gp, cfg).value <= 1e-9);
    }
}

TEST_CASE("alpha extremes ignore the other modality") {
    Rng rng(43);
    Graph g1 = oracles::random_graph(rng, 5, 3, 0.4, "a");
    Graph g2 = oracles::random_graph(rng, 5, 3, 0.4, "b");

    SECTION("alpha=1 is blind to features") {
        FgwConfig cfg;
        cfg.alpha = 1.0;
        const double base = fgw::fgw_distance(g1, g2, cfg).value;
        g1.features = gaussian_matrix(rng, 5, 3);
        g2.features = gaussian_matrix(rng, 5, 3);
        const double shifted = fgw::fgw_distance(g1, g2, cfg).value;
        REQUIRE(std::abs(base - shifted) < 1e-6);
    }
    SECTION("alpha=0 is blind to structure") {
        FgwConfig cfg;
        cfg.alpha = 0.0;
        const double base = fgw::fgw_distance(g1, g2, cfg).value;
        Graph h1 = g1, h2 = g2;
        h1.adjacency = Matrix::Zero(5, 5);
        h2.adjacency.setZero();
        for (int i = 0; i < 4; ++i) h2.adjacency(i, i + 1) = h2.adjacency(i + 1, i) = 1.0;
        const double shifted = fgw::fgw_distance(h1, h2, cfg).value;
        REQUIRE(std::abs(base - shifted) < 1e-6);
    }
}

TEST_CASE("conditional gradient descends monotonically with feasible iterates") {
    Rng rng(44);
    const Graph g1 = oracles::random_graph(rng, 7, 3, 0.4, "a");
    const Graph g2 = oracles::random_graph(rng, 6, 3, 0.3, "b");
    const auto res = fgw::fgw_distance(g1, g2, {});
    REQUIRE(res.converged);
    REQUIRE(res.objective_history.size() >= 1);
    for (std::size_t i = 1; i < res.objective_history.size(); ++i)
        REQUIRE(res.objective_history[i] <= res.objective_history[i - 1] + 1e-12);
    REQUIRE((res.coupling.pi.rowwise().sum() - g1.node_weights).cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE((res.coupling.pi.colwise().sum().transpose() - g2.node_weights).cwiseAbs().maxCoeff() <
            1e-8);
}

TEST_CASE("fgw rejects mismatched feature dimensions") {
    Rng rng(45);
    const Graph g1 = oracles::random_graph(rng, 3, 2, 0.5);
    const Graph g2 = oracles::random_graph(rng, 3, 3, 0.5);
    REQUIRE_THROWS_AS(fgw::fgw_distance(g1, g2, {}), std::invalid_argument);
}

TEST_CASE("fgw_gradient closed forms") {
    SECTION("stationary at self-distance") {
        Rng rng(46);
        const Graph g = oracles::random_graph(rng, 5, 2, 0.5);
        const auto res = fgw::fgw_distance(g, g, {});
        const auto grad = fgw::fgw_gradient(g, g, res.coupling, 0.5);
        REQUIRE(grad.d_features.cwiseAbs().maxCoeff() <= 1e-6);
        // Guidance uses only off-diagonal adjacency entries.
        Matrix off = grad.d_adjacency;
        off.diagonal().setZero();
        REQUIRE(off.cwiseAbs().maxCoeff() <= 1e-6);
    }
    SECTION("1-node pair, alpha=0") {
        const Graph g1 = one_node_graph(2.0, "a");
        const Graph g2 = one_node_graph(0.0, "b");
        const auto res = fgw::fgw_distance(g1, g2, {.alpha = 0.0});
        const auto grad = fgw::fgw_gradient(g1, g2, res.coupling, 0.0);
        REQUIRE(grad.d_features(0, 0) == Catch::Approx(4.0));
    }
}

TEST_CASE("fgw_gradient matches central finite differences") {
    Rng rng(47);
    FgwConfig cfg;
    cfg.alpha = 0.5;
    const double h = 1e-5;
    for (int trial = 0; trial < 5; ++trial) {
        Graph g1 = oracles::random_graph(rng, 3, 2, 0.6, "fd1");
        const Graph g2 = oracles::random_graph(rng, 3, 2, 0.4, "fd2");
        g1.adjacency *= 0.8;  // interior point so perturbed entries stay meaningful
        g1.form = GraphForm::relaxed;

        const auto res = fgw::fgw_distance(g1, g2, cfg);
        const auto grad = fgw::fgw_gradient(g1, g2, res.coupling, cfg.alpha);

        // Symmetric zero-diagonal direction for A, arbitrary direction for X.
        Matrix da = symmetrize_upper(gaussian_matrix(rng, 3, 3));
        Matrix dx = gaussian_matrix(rng, 3, 2);

        auto value_at = [&](double eps) {
            Graph moved = g1;
            moved.adjacency += eps * da;
            moved.features += eps * dx;
            return fgw::fgw_distance(moved, g2, cfg).value;
        };
        const double fd = (value_at(h) - value_at(-h)) / (2.0 * h);
        const double analytic = (grad.d_adjacency.array() * da.array()).sum() +
                                (grad.d_features.array() * dx.array()).sum();
        REQUIRE(oracles::close_rel(fd, analytic, 1e-3, 1e-7));
    }
}

TEST_CASE("similarity is the bounded inverse transform") {
    Rng rng(48);
    const Graph g = oracles::random_graph(rng, 4, 2, 0.5);
    REQUIRE(fgw::similarity(g, g, {}) == Catch::Approx(1.0).margin(1e-9));

    const Graph g1 = one_node_graph(0.0, "a");
    const Graph g2 = one_node_graph(3.0, "b");
    REQUIRE(fgw::similarity(g1, g2, {.alpha = 0.5}) == Catch::Approx(1.0 / 5.5).margin(1e-9));

    REQUIRE(fgw::similarity_from_distance(1.0) > fgw::similarity_from_distance(2.0));
}
