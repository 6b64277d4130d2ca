#include <catch2/catch_amalgamated.hpp>

#include "graphood/prototype.hpp"
#include "oracles.hpp"

using namespace graphood;
using proto::PrototypeConfig;

namespace {

Graph feature_point(double x, const std::string& id) {
    Matrix f(1, 1);
    f(0, 0) = x;
    return graph_from_edges(1, {}, f, id);
}

Corpus train_corpus(Rng& rng, int count, Eigen::Index n, Eigen::Index d, double p) {
    Corpus corpus;
    corpus.role = CorpusRole::train_id;
    corpus.feature_dim = d;
    for (int i = 0; i < count; ++i)
        corpus.graphs.push_back(oracles::random_graph(rng, n, d, p, "t" + std::to_string(i)));
    return corpus;
}

}  // namespace

TEST_CASE("loss_id arithmetic") {
    const Graph gbar = feature_point(0.0, "gbar");
    REQUIRE(proto::loss_id({gbar}, gbar, 0.5) == Catch::Approx(0.0).margin(1e-9));

    // 1-node graphs at alpha=0.5: distance = 0.5 (x - y)^2.
    const Graph at2 = feature_point(2.0, "a");        // distance 2
    const Graph at4 = feature_point(std::sqrt(8.0), "b");  // distance 4
    REQUIRE(proto::loss_id({at2, at4}, gbar, 0.5) == Catch::Approx(3.0).margin(1e-9));
    REQUIRE(proto::loss_id({at4}, gbar, 0.5) == Catch::Approx(4.0).margin(1e-9));

    REQUIRE_THROWS_AS(proto::loss_id({}, gbar, 0.5), std::invalid_argument);
}

TEST_CASE("loss_ood is the negated mean distance") {
    const Graph gbar = feature_point(0.0, "gbar");
    REQUIRE(proto::loss_ood({gbar}, gbar, 0.5) == Catch::Approx(0.0).margin(1e-9));

    const Graph d1 = feature_point(std::sqrt(2.0), "a");  // distance 1
    const Graph d3 = feature_point(std::sqrt(6.0), "b");  // distance 3
    REQUIRE(proto::loss_ood({d1, d3}, gbar, 0.5) == Catch::Approx(-2.0).margin(1e-9));

    const std::vector<Graph> same{d1, d3};
    REQUIRE(proto::loss_ood(same, gbar, 0.5) == Catch::Approx(-proto::loss_id(same, gbar, 0.5)));
    REQUIRE_THROWS_AS(proto::loss_ood({}, gbar, 0.5), std::invalid_argument);
}

TEST_CASE("guide_loss cancels exactly when batch and proxies coincide") {
    Rng rng(110);
    const Graph g = oracles::random_graph(rng, 4, 2, 0.5, "g");
    Graph gbar = oracles::random_graph(rng, 4, 2, 0.5, "gbar");
    gbar.adjacency *= 0.7;
    gbar.form = GraphForm::relaxed;

    PrototypeConfig cfg;
    const auto gl = proto::guide_loss({g}, {g}, gbar, cfg);
    REQUIRE(std::abs(gl.total) <= 1e-8);
    REQUIRE(gl.grad_adjacency.cwiseAbs().maxCoeff() <= 1e-8);
    REQUIRE(gl.grad_features.cwiseAbs().maxCoeff() <= 1e-8);

    REQUIRE_THROWS_AS(proto::guide_loss({}, {g}, gbar, cfg), std::invalid_argument);
    REQUIRE_THROWS_AS(proto::guide_loss({g}, {}, gbar, cfg), std::invalid_argument);
}

TEST_CASE("guide_loss gradient matches central finite differences") {
    Rng rng(111);
    PrototypeConfig cfg;
    cfg.fgw_alpha = 0.5;
    const double h = 1e-5;
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<Graph> batch{oracles::random_graph(rng, 4, 2, 0.5, "b0"),
                                 oracles::random_graph(rng, 4, 2, 0.3, "b1")};
        std::vector<Graph> proxies{oracles::random_graph(rng, 4, 2, 0.6, "p0"),
                                   oracles::random_graph(rng, 4, 2, 0.4, "p1")};
        Graph gbar = oracles::random_graph(rng, 4, 2, 0.5, "gbar");
        gbar.adjacency *= 0.8;
        gbar.form = GraphForm::relaxed;

        const auto gl = proto::guide_loss(batch, proxies, gbar, cfg);

        const Matrix da = symmetrize_upper(gaussian_matrix(rng, 4, 4));
        const Matrix dx = gaussian_matrix(rng, 4, 2);
        auto total_at = [&](double eps) {
            Graph moved = gbar;
            moved.adjacency += eps * da;
            moved.features += eps * dx;
            return proto::loss_id(batch, moved, cfg.fgw_alpha) +
                   proto::loss_ood(proxies, moved, cfg.fgw_alpha);
        };
        const double fd = (total_at(h) - total_at(-h)) / (2.0 * h);
        const double analytic = (gl.grad_adjacency.array() * da.array()).sum() +
                                (gl.grad_features.array() * dx.array()).sum();
        REQUIRE(oracles::close_rel(fd, analytic, 1e-3, 1e-7));
    }
}

TEST_CASE("zero guidance scale reproduces the unguided reconstruction") {
    Rng rng(112);
    Corpus corpus = train_corpus(rng, 6, 5, 2, 0.4);
    auto params = diffusion::ScoreNetParams::random_init(rng, 2, 8);
    diffusion::SdeConfig sde;
    sde.num_steps = 8;

    PrototypeConfig cfg;
    cfg.guidance_scale = 0.0;
    cfg.t_perturb = 0.4;

    const std::vector<Graph> proxies{oracles::random_graph(rng, 5, 2, 0.5, "px")};

    Rng run_rng(400);
    const auto run = proto::generate_prototype(corpus.graphs, proxies, params, sde, cfg, run_rng);

    Rng replay_rng(400);
    const std::size_t idx = uniform_index(replay_rng, corpus.graphs.size());
    REQUIRE(idx == run.start_index);
    const Graph rec =
        diffusion::reconstruct(corpus.graphs[idx], params, sde, cfg.t_perturb, replay_rng);
    const Graph expected = quantize_adjacency(rec);
    REQUIRE(run.prototype.adjacency == expected.adjacency);
    REQUIRE(run.prototype.features == expected.features);
}

TEST_CASE("prototype list length follows the ceiling rule") {
    Rng rng(113);
    auto params = diffusion::ScoreNetParams::random_init(rng, 2, 8);
    diffusion::SdeConfig sde;
    sde.num_steps = 2;

    PrototypeConfig cfg;
    cfg.batch_size = 128;
    cfg.use_loss_id = false;   // arithmetic-only run, skip FGW guidance
    cfg.use_loss_ood = false;
    cfg.perturb.proxy_count = 2;

    struct CasePoint {
        int corpus_size;
        int expected;
    };
    for (const auto& [size, expected] : {CasePoint{256, 2}, CasePoint{130, 2}, CasePoint{1, 1}}) {
        Corpus corpus = train_corpus(rng, size, 4, 2, 0.4);
        const auto pl = proto::build_prototype_list(corpus, params, sde, cfg);
        INFO("corpus size " << size);
        REQUIRE(pl.count() == expected);
        for (const Graph& p : pl.prototypes) REQUIRE(validate(p).ok());
    }
}

TEST_CASE("build_prototype_list is deterministic and validates inputs") {
    Rng rng(114);
    Corpus corpus = train_corpus(rng, 9, 5, 2, 0.4);
    auto params = diffusion::ScoreNetParams::random_init(rng, 2, 8);
    diffusion::SdeConfig sde;
    sde.num_steps = 6;

    PrototypeConfig cfg;
    cfg.batch_size = 4;  // 9/4 -> 3 prototypes
    cfg.perturb.proxy_count = 3;
    cfg.guidance_refresh_every = 2;

    const auto a = proto::build_prototype_list(corpus, params, sde, cfg);
    const auto b = proto::build_prototype_list(corpus, params, sde, cfg);
    REQUIRE(a.count() == 3);
    REQUIRE(a.batch_size == 4);
    for (int i = 0; i < a.count(); ++i) {
        REQUIRE(a.prototypes[i].adjacency == b.prototypes[i].adjacency);
        REQUIRE(a.prototypes[i].features == b.prototypes[i].features);
    }

    Corpus wrong_role = corpus;
    wrong_role.role = CorpusRole::test_id;
    REQUIRE_THROWS_AS(proto::build_prototype_list(wrong_role, params, sde, cfg),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(proto::build_prototype_list(Corpus{}, params, sde, cfg),
                      std::invalid_argument);
}

TEST_CASE("prototype list files round-trip") {
    Rng rng(115);
    proto::PrototypeList pl;
    pl.fgw_alpha = 0.5;
    pl.batch_size = 4;
    pl.seed = 19;
    pl.perturb_seed = 17;
    for (int i = 0; i < 3; ++i)
        pl.prototypes.push_back(oracles::random_graph(rng, 4, 2, 0.5, "proto-" + std::to_string(i)));

    const std::string path = "/tmp/graphood_test_pl.jsonl";
    proto::save_prototype_list(path, pl);
    const auto loaded = proto::load_prototype_list(path);
    REQUIRE(loaded.count() == 3);
    REQUIRE(loaded.fgw_alpha == 0.5);
    REQUIRE(loaded.batch_size == 4);
    REQUIRE(loaded.seed == 19);
    for (int i = 0; i < 3; ++i)
        REQUIRE(loaded.prototypes[i].adjacency == pl.prototypes[i].adjacency);
}

TEST_CASE("guided runs trend toward the batch and away from proxies") {
    Rng rng(116);
    Corpus corpus = train_corpus(rng, 24, 6, 2, 0.3);
    // Shift the feature cluster so the pull toward the batch is visible.
    for (Graph& g : corpus.graphs) g.features.array() += 1.0;

    diffusion::SdeConfig sde;
    sde.num_steps = 16;
    diffusion::ScoreTrainConfig tcfg;
    tcfg.steps = 2500;
    tcfg.hidden_dim = 16;
    const auto trained = diffusion::train_score_net(corpus, sde, tcfg, 900);

    proxy::PerturbConfig pcfg;
    pcfg.strength = 0.5;
    pcfg.proxy_count = 16;
    std::vector<Eigen::Index> sizes(8, 6);
    Rng prng(41);
    const auto proxies = proxy::generate_ood_proxies(trained.params, pcfg, sde, sizes, prng);

    PrototypeConfig cfg;
    cfg.t_perturb = 0.7;
    cfg.guidance_scale = 0.3;  // keeps the repulsion from overpowering the score anchor

    int id_improved = 0, ood_improved = 0, runs = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng run_rng(7000 + seed);
        const auto run =
            proto::generate_prototype(corpus.graphs, proxies, trained.params, sde, cfg, run_rng);
        REQUIRE(run.loss_history.size() >= 2);
        ++runs;
        if (run.loss_history.back().first <= run.loss_history.front().first) ++id_improved;
        if (run.loss_history.back().second <= run.loss_history.front().second) ++ood_improved;
    }
    INFO("id_improved " << id_improved << "/" << runs << ", ood_improved " << ood_improved);
    REQUIRE(id_improved * 2 > runs);   // majority
    REQUIRE(ood_improved * 2 > runs);  // majority
}
