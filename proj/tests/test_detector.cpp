#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "graphood/detector.hpp"
#include "graphood/weights_io.hpp"
#include "oracles.hpp"

using namespace graphood;

namespace {

Graph feature_point(double x, const std::string& id) {
    Matrix f(1, 1);
    f(0, 0) = x;
    return graph_from_edges(1, {}, f, id);
}

}  // namespace

TEST_CASE("pgr judge takes the maximum prototype similarity") {
    fgw::FgwConfig fcfg;
    fcfg.alpha = 0.5;
    const Graph g_test = feature_point(0.0, "t");

    SECTION("the test graph itself dominates") {
        Rng rng(120);
        proto::PrototypeList pl;
        pl.prototypes.push_back(oracles::random_graph(rng, 3, 1, 0.5, "other"));
        pl.prototypes.push_back(g_test);
        const auto j = detect::judge_score_pgr(g_test, pl, fcfg);
        REQUIRE(j.score == Catch::Approx(1.0).margin(1e-9));
        REQUIRE(j.method == "pgr");
    }
    SECTION("singleton list") {
        proto::PrototypeList pl;
        pl.prototypes.push_back(feature_point(3.0, "p"));  // distance 4.5
        const auto j = detect::judge_score_pgr(g_test, pl, fcfg);
        REQUIRE(j.score == Catch::Approx(1.0 / 5.5).margin(1e-9));
    }
    SECTION("two prototypes at distances 4.5 and 1.0") {
        proto::PrototypeList pl;
        pl.prototypes.push_back(feature_point(3.0, "far"));             // distance 4.5
        pl.prototypes.push_back(feature_point(std::sqrt(2.0), "near"));  // distance 1.0
        const auto j = detect::judge_score_pgr(g_test, pl, fcfg);
        REQUIRE(j.score == Catch::Approx(0.5).margin(1e-9));
    }
    SECTION("empty list is an error") {
        proto::PrototypeList pl;
        REQUIRE_THROWS_AS(detect::judge_score_pgr(g_test, pl, fcfg), std::invalid_argument);
    }
}

TEST_CASE("pgr path runs zero reverse steps and never loads score weights") {
    Rng rng(121);
    proto::PrototypeList pl;
    for (int i = 0; i < 3; ++i)
        pl.prototypes.push_back(oracles::random_graph(rng, 5, 2, 0.4, "p" + std::to_string(i)));

    const long loads_before = io::score_net_load_count().load();
    fgw::FgwConfig fcfg;
    for (int i = 0; i < 20; ++i) {
        const Graph g = oracles::random_graph(rng, 5, 2, 0.4, "t" + std::to_string(i));
        const auto j = detect::judge_score_pgr(g, pl, fcfg);
        REQUIRE(j.reverse_steps_used == 0);
    }
    REQUIRE(io::score_net_load_count().load() == loads_before);
}

TEST_CASE("gr judge: limit case, determinism, step accounting") {
    Rng rng(122);
    Corpus corpus;
    corpus.feature_dim = 2;
    for (int i = 0; i < 10; ++i)
        corpus.graphs.push_back(oracles::random_graph(rng, 5, 2, 0.4, "c" + std::to_string(i)));

    auto params = diffusion::ScoreNetParams::random_init(rng, 2, 8);
    gnn::EncoderTrainConfig ecfg;
    ecfg.epochs = 10;
    ecfg.hidden_dim = 8;
    const auto encoder = gnn::train_encoder(corpus, ecfg, 5).params;

    diffusion::SdeConfig sde;
    sde.num_steps = 12;
    const Graph g = corpus.graphs[0];

    Rng r1(50);
    const auto tiny = detect::judge_score_gr(g, params, encoder, sde, 1e-7, r1);
    REQUIRE(tiny.score == Catch::Approx(1.0).margin(1e-3));
    REQUIRE(tiny.reverse_steps_used == sde.num_steps);
    REQUIRE(tiny.method == "gr_baseline");

    Rng r2(51), r3(51);
    const auto a = detect::judge_score_gr(g, params, encoder, sde, 0.3, r2);
    const auto b = detect::judge_score_gr(g, params, encoder, sde, 0.3, r3);
    REQUIRE(a.score == b.score);
}

TEST_CASE("threshold rule sends the boundary to OOD") {
    detect::JudgeScore j;
    j.score = 0.9;
    REQUIRE(detect::threshold_detect(j, 0.5) == detect::Verdict::ID);
    j.score = 0.5;
    REQUIRE(detect::threshold_detect(j, 0.5) == detect::Verdict::OOD);
    j.score = 0.1;
    REQUIRE(detect::threshold_detect(j, 0.5) == detect::Verdict::OOD);
}

TEST_CASE("rank metrics agree across monotone similarity transforms") {
    Rng rng(123);
    proto::PrototypeList pl;
    for (int i = 0; i < 2; ++i)
        pl.prototypes.push_back(oracles::random_graph(rng, 5, 2, 0.4, "p" + std::to_string(i)));

    fgw::FgwConfig fcfg;
    metrics::DetectionResult inv, expd;
    for (int i = 0; i < 30; ++i) {
        Graph g = oracles::random_graph(rng, 5, 2, 0.4, "t" + std::to_string(i));
        const int label = i % 2;
        if (label == 0) g.features.array() -= 1.5;
        const auto j = detect::judge_score_pgr(g, pl, fcfg);
        const double distance = 1.0 / j.score - 1.0;
        inv.scores.push_back(j.score);
        inv.labels.push_back(label);
        expd.scores.push_back(std::exp(-distance));
        expd.labels.push_back(label);
    }
    const auto mi = metrics::compute_metrics(inv);
    const auto me = metrics::compute_metrics(expd);
    REQUIRE(std::abs(mi.auroc - me.auroc) <= 1e-12);
    REQUIRE(std::abs(mi.aupr - me.aupr) <= 1e-12);
    REQUIRE(std::abs(mi.fpr95 - me.fpr95) <= 1e-12);
}

TEST_CASE("scores files round-trip through the CSV format") {
    std::vector<detect::JudgeScore> scores;
    detect::JudgeScore a{"g-1", 0.123456789012345, "pgr", 1.25, 0};
    detect::JudgeScore b{"g-2", 0.5, "gr_baseline", 100.0, 60};
    scores.push_back(a);
    scores.push_back(b);

    std::ostringstream os;
    detect::write_scores(os, scores);
    const std::string text = os.str();
    REQUIRE(text.rfind("graph_id,score,method,elapsed_ms,reverse_steps\n", 0) == 0);

    std::istringstream is(text);
    const auto loaded = detect::parse_scores(is);
    REQUIRE(loaded.size() == 2);
    REQUIRE(loaded[0].graph_id == "g-1");
    REQUIRE(loaded[0].score == a.score);  // full-precision round trip
    REQUIRE(loaded[1].reverse_steps_used == 60);
    REQUIRE(loaded[1].method == "gr_baseline");
}
