#include <catch2/catch_amalgamated.hpp>

#include "graphood/graph.hpp"
#include "oracles.hpp"

using namespace graphood;

TEST_CASE("uniform_weights forms the simplex vector") {
    REQUIRE(uniform_weights(1)(0) == 1.0);

    const Vector w4 = uniform_weights(4);
    REQUIRE(w4.size() == 4);
    for (int i = 0; i < 4; ++i) REQUIRE(w4(i) == 0.25);

    const Vector w3 = uniform_weights(3);
    REQUIRE(std::abs(w3.sum() - 1.0) < 1e-12);

    REQUIRE_THROWS_AS(uniform_weights(0), std::invalid_argument);
}

TEST_CASE("validate flags broken invariants") {
    Graph g = graph_from_edges(3, {{0, 1}, {1, 2}}, Matrix::Zero(3, 2), "path");
    REQUIRE(validate(g).ok());

    SECTION("weights off the simplex") {
        g.node_weights *= 0.9;
        const auto report = validate(g);
        REQUIRE_FALSE(report.ok());
        REQUIRE(report.to_string().find("sum to 1") != std::string::npos);
    }
    SECTION("asymmetric adjacency") {
        g.adjacency(1, 2) = 1.0;
        g.adjacency(2, 1) = 0.0;
        const auto report = validate(g);
        REQUIRE_FALSE(report.ok());
        REQUIRE(report.to_string().find("symmetric") != std::string::npos);
    }
    SECTION("nonzero diagonal") {
        g.adjacency(1, 1) = 1.0;
        REQUIRE_FALSE(validate(g).ok());
    }
    SECTION("non-finite features") {
        g.features(0, 0) = std::numeric_limits<double>::quiet_NaN();
        REQUIRE_FALSE(validate(g).ok());
    }
}

TEST_CASE("quantize_adjacency thresholds and is idempotent") {
    Graph g;
    g.n = 2;
    g.features = Matrix::Zero(2, 1);
    g.node_weights = uniform_weights(2);
    g.form = GraphForm::relaxed;

    g.adjacency = Matrix::Zero(2, 2);
    g.adjacency(0, 1) = g.adjacency(1, 0) = 0.9;
    Graph q = quantize_adjacency(g, 0.5);
    REQUIRE(q.adjacency(0, 1) == 1.0);
    REQUIRE(q.adjacency(1, 0) == 1.0);
    REQUIRE(q.form == GraphForm::discrete);

    g.adjacency(0, 1) = g.adjacency(1, 0) = 0.1;
    q = quantize_adjacency(g, 0.5);
    REQUIRE(q.adjacency.isZero());

    Rng rng(7);
    const Graph r = oracles::random_graph(rng, 6, 3, 0.4);
    const Graph once = quantize_adjacency(r, 0.5);
    const Graph twice = quantize_adjacency(once, 0.5);
    REQUIRE(once.adjacency == twice.adjacency);
    REQUIRE(once.features == r.features);

    REQUIRE_THROWS_AS(quantize_adjacency(g, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(quantize_adjacency(g, 1.0), std::invalid_argument);
}

TEST_CASE("permute_graph relabels consistently") {
    Rng rng(11);
    const Graph g = oracles::random_graph(rng, 5, 2, 0.5);
    const std::vector<Eigen::Index> perm{3, 1, 4, 0, 2};
    const Graph p = permute_graph(g, perm);
    REQUIRE(validate(p).ok());
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j)
            REQUIRE(p.adjacency(i, j) == g.adjacency(perm[i], perm[j]));
    REQUIRE(p.features.row(2) == g.features.row(4));
}

TEST_CASE("graph_from_edges rejects bad input") {
    REQUIRE_THROWS_AS(graph_from_edges(2, {{0, 0}}, Matrix::Zero(2, 1)), std::invalid_argument);
    REQUIRE_THROWS_AS(graph_from_edges(2, {{0, 3}}, Matrix::Zero(2, 1)), std::invalid_argument);
}
