#pragma once

#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "graphood/graph.hpp"

namespace graphood::diffusion {

/// Variance-preserving SDE with a linear noise schedule on t in [0,1].
/// Closed-form marginal: G_t = m(t) G_0 + s(t) eps with
/// m(t) = exp(-0.5 int_0^t beta) and s(t)^2 = 1 - m(t)^2.
struct SdeConfig {
    double beta_min = 0.1;
    double beta_max = 20.0;
    int num_steps = 100;

    void check() const {
        if (!(beta_min > 0.0 && beta_max > beta_min))
            throw std::invalid_argument("sde: need 0 < beta_min < beta_max");
        if (num_steps < 1) throw std::invalid_argument("sde: num_steps must be >= 1");
    }
    double beta(double t) const { return beta_min + t * (beta_max - beta_min); }
    double int_beta(double t) const { return beta_min * t + 0.5 * (beta_max - beta_min) * t * t; }
    double mean_coef(double t) const { return std::exp(-0.5 * int_beta(t)); }
    double std_dev(double t) const {
        const double m = mean_coef(t);
        return std::sqrt(std::max(0.0, 1.0 - m * m));
    }
};

/// Two-headed score network. Node states pass through message-passing layers
/// conditioned on a sinusoidal time embedding; the feature head emits a
/// per-node noise estimate and the adjacency head combines a symmetric
/// bilinear form over node states with a time-gated linear term on the noisy
/// adjacency itself (the linear term carries the entrywise conditional mean,
/// which the bilinear form alone cannot represent).
struct ScoreNetParams {
    Eigen::Index feature_dim = 0;
    Eigen::Index hidden_dim = 32;
    Eigen::Index time_dim = 8;
    int format_version = 1;

    Matrix w_in;        // d x h
    Matrix w_time1;     // time_dim x h
    Matrix w_layer1;    // h x h
    Matrix w_time2;     // time_dim x h
    Matrix w_layer2;    // h x h
    Matrix w_out_x;     // h x d
    Matrix w_skip_x;    // d x d
    Matrix w_bilinear;  // h x h
    Matrix w_time_adj;  // time_dim x 2  (adjacency gain, offdiagonal bias)

    static constexpr const char* tensor_names[9] = {
        "w_in", "w_time1", "w_layer1", "w_time2", "w_layer2",
        "w_out_x", "w_skip_x", "w_bilinear", "w_time_adj"};

    std::array<Matrix*, 9> tensors() {
        return {&w_in, &w_time1, &w_layer1, &w_time2, &w_layer2,
                &w_out_x, &w_skip_x, &w_bilinear, &w_time_adj};
    }
    std::array<const Matrix*, 9> tensors() const {
        return {&w_in, &w_time1, &w_layer1, &w_time2, &w_layer2,
                &w_out_x, &w_skip_x, &w_bilinear, &w_time_adj};
    }

    static ScoreNetParams zero_init(Eigen::Index d, Eigen::Index hidden = 32) {
        ScoreNetParams p;
        p.feature_dim = d;
        p.hidden_dim = hidden;
        p.w_in = Matrix::Zero(d, hidden);
        p.w_time1 = Matrix::Zero(p.time_dim, hidden);
        p.w_layer1 = Matrix::Zero(hidden, hidden);
        p.w_time2 = Matrix::Zero(p.time_dim, hidden);
        p.w_layer2 = Matrix::Zero(hidden, hidden);
        p.w_out_x = Matrix::Zero(hidden, d);
        p.w_skip_x = Matrix::Zero(d, d);
        p.w_bilinear = Matrix::Zero(hidden, hidden);
        p.w_time_adj = Matrix::Zero(p.time_dim, 2);
        return p;
    }

    static ScoreNetParams random_init(Rng& rng, Eigen::Index d, Eigen::Index hidden = 32) {
        ScoreNetParams p = zero_init(d, hidden);
        auto he = [&](Matrix& m) {
            m = gaussian_matrix(rng, m.rows(), m.cols(), 1.0 / std::sqrt(static_cast<double>(m.rows())));
        };
        he(p.w_in);
        he(p.w_time1);
        he(p.w_layer1);
        he(p.w_time2);
        he(p.w_layer2);
        // Output heads start at zero: the untrained net predicts zero noise.
        return p;
    }

    void check() const {
        if (feature_dim < 1) throw std::invalid_argument("score net: feature_dim unset");
        if (w_in.rows() != feature_dim || w_in.cols() != hidden_dim ||
            w_layer1.rows() != hidden_dim || w_layer2.rows() != hidden_dim ||
            w_out_x.rows() != hidden_dim || w_out_x.cols() != feature_dim ||
            w_skip_x.rows() != feature_dim || w_bilinear.rows() != hidden_dim ||
            w_time_adj.cols() != 2)
            throw std::invalid_argument("score net: tensor dimensions do not chain");
        for (const Matrix* m : tensors())
            if (!m->allFinite()) throw std::invalid_argument("score net: non-finite parameters");
    }
};

inline Vector time_embedding(double t, Eigen::Index dim) {
    Vector e(dim);
    for (Eigen::Index i = 0; i < dim / 2; ++i) {
        const double freq = std::pow(2.0, static_cast<double>(i)) * 3.14159265358979323846;
        e(2 * i) = std::sin(freq * t);
        e(2 * i + 1) = std::cos(freq * t);
    }
    return e;
}

namespace detail {

struct ForwardCache {
    Vector emb;
    Matrix adjacency, a_tilde, x;
    Matrix z1, h1, z2, h2, z3, h3;
};

struct NoiseEstimate {
    Matrix eps_x;  // n x d
    Matrix eps_a;  // n x n, symmetric, zero diagonal
};

inline NoiseEstimate predict_noise(const ScoreNetParams& p, const Matrix& adjacency,
                                   const Matrix& x, double t, ForwardCache* cache) {
    const Eigen::Index n = x.rows();
    if (x.cols() != p.feature_dim)
        throw std::invalid_argument("score net: feature dimension mismatch");
    if (adjacency.rows() != n || adjacency.cols() != n)
        throw std::invalid_argument("score net: adjacency shape mismatch");

    const Vector emb = time_embedding(t, p.time_dim);
    const Matrix a_tilde = adjacency + Matrix::Identity(n, n);

    Matrix z1 = x * p.w_in;
    z1.rowwise() += (emb.transpose() * p.w_time1).row(0);
    const Matrix h1 = relu(z1);

    Matrix z2 = a_tilde * h1 * p.w_layer1;
    z2.rowwise() += (emb.transpose() * p.w_time2).row(0);
    const Matrix h2 = relu(z2);

    const Matrix z3 = a_tilde * h2 * p.w_layer2;
    const Matrix h3 = relu(z3);

    NoiseEstimate out;
    out.eps_x = h3 * p.w_out_x + x * p.w_skip_x;

    const Matrix bil = h3 * p.w_bilinear * h3.transpose();
    const Eigen::RowVector2d gate = emb.transpose() * p.w_time_adj;
    Matrix eps_a = 0.5 * (bil + bil.transpose());
    eps_a += gate(0) * adjacency;
    eps_a.array() += gate(1);
    eps_a = symmetrize_upper(eps_a);  // zero diagonal, exact symmetry

    out.eps_a = std::move(eps_a);
    if (cache) {
        cache->emb = emb;
        cache->adjacency = adjacency;
        cache->a_tilde = a_tilde;
        cache->x = x;
        cache->z1 = std::move(z1);
        cache->h1 = h1;
        cache->z2 = std::move(z2);
        cache->h2 = h2;
        cache->z3 = z3;
        cache->h3 = h3;
    }
    return out;
}

// Gradients of a scalar loss with respect to every tensor, given the loss
// gradients at the two heads. d_eps_a must be symmetric with zero diagonal.
inline void backprop(const ScoreNetParams& p, const ForwardCache& c, const Matrix& d_eps_x,
                     const Matrix& d_eps_a, ScoreNetParams& grads) {
    const Matrix relu3 = (c.z3.array() > 0.0).cast<double>();
    const Matrix relu2 = (c.z2.array() > 0.0).cast<double>();
    const Matrix relu1 = (c.z1.array() > 0.0).cast<double>();

    // Adjacency head.
    const double d_gain = (d_eps_a.array() * c.adjacency.array()).sum();
    const double d_bias = d_eps_a.sum();
    Eigen::RowVector2d d_gate;
    d_gate << d_gain, d_bias;
    grads.w_time_adj += c.emb * d_gate;
    grads.w_bilinear += c.h3.transpose() * d_eps_a * c.h3;
    Matrix d_h3 = d_eps_a * c.h3 * (p.w_bilinear + p.w_bilinear.transpose());

    // Feature head.
    grads.w_out_x += c.h3.transpose() * d_eps_x;
    grads.w_skip_x += c.x.transpose() * d_eps_x;
    d_h3 += d_eps_x * p.w_out_x.transpose();

    // Layer 3: z3 = a_tilde * h2 * w_layer2.
    const Matrix d_z3 = d_h3.cwiseProduct(relu3);
    grads.w_layer2 += (c.a_tilde * c.h2).transpose() * d_z3;
    const Matrix d_h2 = c.a_tilde * d_z3 * p.w_layer2.transpose();

    // Layer 2: z2 = a_tilde * h1 * w_layer1 + 1 tau2.
    const Matrix d_z2 = d_h2.cwiseProduct(relu2);
    grads.w_layer1 += (c.a_tilde * c.h1).transpose() * d_z2;
    grads.w_time2 += c.emb * d_z2.colwise().sum();
    const Matrix d_h1 = c.a_tilde * d_z2 * p.w_layer1.transpose();

    // Layer 1: z1 = x * w_in + 1 tau1.
    const Matrix d_z1 = d_h1.cwiseProduct(relu1);
    grads.w_in += c.x.transpose() * d_z1;
    grads.w_time1 += c.emb * d_z1.colwise().sum();
}

}  // namespace detail

struct ScorePair {
    Matrix score_x;  // n x d
    Matrix score_a;  // n x n, symmetric, zero diagonal
};

/// Score estimate S_theta(G_t, t): the predicted noise rescaled by -1/s(t)
/// under the SDE's marginal schedule.
inline ScorePair score(const Graph& g_t, double t, const ScoreNetParams& params,
                       const SdeConfig& sde) {
    params.check();
    const auto eps = detail::predict_noise(params, g_t.adjacency, g_t.features, t, nullptr);
    const double denom = std::max(1e-8, sde.std_dev(std::clamp(t, 0.0, 1.0)));
    ScorePair out;
    out.score_x = -eps.eps_x / denom;
    out.score_a = -eps.eps_a / denom;
    return out;
}

/// Sample from the closed-form VP marginal at time t.
inline Graph forward_diffuse(const Graph& g0, double t, const SdeConfig& sde, Rng& rng) {
    sde.check();
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("forward_diffuse: t must be in [0,1]");
    const double m = sde.mean_coef(t);
    const double s = sde.std_dev(t);
    Graph out = g0;
    out.features = m * g0.features + s * gaussian_matrix(rng, g0.n, g0.feature_dim());
    out.adjacency = m * g0.adjacency + s * symmetric_noise(rng, g0.n);
    out.form = GraphForm::relaxed;
    return out;
}

/// Externally supplied guidance gradient, subtracted from the score inside
/// the reverse drift.
struct Guidance {
    Matrix d_adjacency;  // n x n, symmetric, zero diagonal
    Matrix d_features;   // n x d
};

/// One explicit Euler-Maruyama update of the reverse SDE with caller-supplied
/// score and noise. dt is negative; noise matrices are scaled by sqrt(|dt|).
inline Graph euler_maruyama_step(const Graph& g_t, double t, double dt, const ScorePair& sc,
                                 const SdeConfig& sde, const Matrix& noise_x,
                                 const Matrix& noise_a, const Guidance* guidance = nullptr) {
    const double beta = sde.beta(t);
    const double diff = std::sqrt(beta * std::abs(dt));

    Matrix eff_x = sc.score_x;
    Matrix eff_a = sc.score_a;
    if (guidance) {
        eff_x -= guidance->d_features;
        eff_a -= guidance->d_adjacency;
    }

    Graph out = g_t;
    out.features = g_t.features + (-0.5 * beta * g_t.features - beta * eff_x) * dt + diff * noise_x;
    Matrix a = g_t.adjacency + (-0.5 * beta * g_t.adjacency - beta * eff_a) * dt + diff * noise_a;
    out.adjacency = symmetrize_upper(a);
    out.form = GraphForm::relaxed;
    return out;
}

/// One reverse step with the network score and fresh noise from rng.
inline Graph reverse_step(const Graph& g_t, double t, double dt, const ScoreNetParams& params,
                          const SdeConfig& sde, Rng& rng,
                          const std::optional<Guidance>& guidance = std::nullopt) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("reverse_step: t must be in (0,1]");
    if (!(dt < 0.0 && -dt <= t + 1e-12)) throw std::invalid_argument("reverse_step: need dt < 0, |dt| <= t");
    const ScorePair sc = score(g_t, t, params, sde);
    const Matrix noise_x = gaussian_matrix(rng, g_t.n, g_t.feature_dim());
    const Matrix noise_a = symmetric_noise(rng, g_t.n);
    return euler_maruyama_step(g_t, t, dt, sc, sde, noise_x, noise_a,
                               guidance ? &*guidance : nullptr);
}

/// Ordered (t, state) pairs of one sampling run.
struct Trajectory {
    std::vector<std::pair<double, Graph>> states;
    std::uint64_t seed = 0;
};

/// Per-step guidance hook for guided generation; return nullopt for none.
using GuidanceFn = std::function<std::optional<Guidance>(const Graph& state, double t, int step)>;

/// Hard bound on integrator state entries. Trained models stay well inside
/// (data lives in roughly [-2, 2]); wildly perturbed ones would otherwise
/// overflow through the relu chain within a few steps.
inline constexpr double kStateClamp = 6.0;

/// Integrate the reverse SDE from t_from down to 0 in sde.num_steps Euler
/// steps. Every reverse run uses the full step budget regardless of span.
inline Graph integrate_reverse(Graph state, double t_from, const ScoreNetParams& params,
                               const SdeConfig& sde, Rng& rng, const GuidanceFn& guidance = {},
                               Trajectory* trajectory = nullptr) {
    sde.check();
    if (!(t_from > 0.0 && t_from <= 1.0))
        throw std::invalid_argument("integrate_reverse: t_from must be in (0,1]");
    const int steps = sde.num_steps;
    const double dt = -t_from / static_cast<double>(steps);
    if (trajectory) trajectory->states.emplace_back(t_from, state);
    for (int i = 0; i < steps; ++i) {
        const double t = t_from * (1.0 - static_cast<double>(i) / steps);
        std::optional<Guidance> guide;
        if (guidance) guide = guidance(state, t, i);
        state = reverse_step(state, t, dt, params, sde, rng, guide);
        state.features = state.features.cwiseMax(-kStateClamp).cwiseMin(kStateClamp);
        state.adjacency = state.adjacency.cwiseMax(-kStateClamp).cwiseMin(kStateClamp);
        if (trajectory) trajectory->states.emplace_back(t + dt, state);
    }
    return state;
}

/// Unconditional generation: Gaussian initialization at t=1, full reverse run.
inline Graph sample(const ScoreNetParams& params, const SdeConfig& sde, Eigen::Index n_nodes,
                    Eigen::Index d, Rng& rng, Trajectory* trajectory = nullptr) {
    Graph init;
    init.n = n_nodes;
    init.features = gaussian_matrix(rng, n_nodes, d);
    init.adjacency = symmetric_noise(rng, n_nodes);
    init.node_weights = uniform_weights(n_nodes);
    init.id = "sample";
    init.form = GraphForm::relaxed;
    return integrate_reverse(std::move(init), 1.0, params, sde, rng, {}, trajectory);
}

/// Perturb-then-reconstruct: diffuse to t_perturb, then denoise back to 0.
inline Graph reconstruct(const Graph& g, const ScoreNetParams& params, const SdeConfig& sde,
                         double t_perturb, Rng& rng, Trajectory* trajectory = nullptr) {
    if (!(t_perturb > 0.0 && t_perturb <= 1.0))
        throw std::invalid_argument("reconstruct: t_perturb must be in (0,1]");
    Graph noised = forward_diffuse(g, t_perturb, sde, rng);
    return integrate_reverse(std::move(noised), t_perturb, params, sde, rng, {}, trajectory);
}

struct ScoreTrainConfig {
    int steps = 3000;
    double learning_rate = 5e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double t_min = 0.02;  // DSM time draws come from U(t_min, 1)
    Eigen::Index hidden_dim = 32;
};

struct ScoreTrainResult {
    ScoreNetParams params;
    std::vector<double> loss_history;
};

/// Per-entry denoising-score-matching loss of params on (graph, t, noise)
/// draws: || eps_hat - eps ||^2 averaged per feature entry plus per
/// off-diagonal adjacency entry. The zero predictor scores exactly 2.0 in
/// expectation.
inline double dsm_loss(const ScoreNetParams& params, const std::vector<Graph>& graphs,
                       const SdeConfig& sde, Rng& rng, int samples, double t_min = 0.02) {
    double total = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Graph& g = graphs[s % graphs.size()];
        const double t = uniform_real(rng, t_min, 1.0);
        const double m = sde.mean_coef(t), sd = sde.std_dev(t);
        const Matrix eps_x = gaussian_matrix(rng, g.n, g.feature_dim());
        const Matrix eps_a = symmetric_noise(rng, g.n);
        const Matrix x_t = m * g.features + sd * eps_x;
        const Matrix a_t = m * g.adjacency + sd * eps_a;
        const auto pred = detail::predict_noise(params, a_t, x_t, t, nullptr);
        const double nd = static_cast<double>(g.n * g.feature_dim());
        const double na = static_cast<double>(g.n * (g.n - 1));
        total += (pred.eps_x - eps_x).squaredNorm() / nd;
        if (na > 0) total += (pred.eps_a - eps_a).squaredNorm() / na;
    }
    return total / samples;
}

/// Denoising score matching with Adam; deterministic given the seed.
inline ScoreTrainResult train_score_net(const Corpus& corpus, const SdeConfig& sde,
                                        const ScoreTrainConfig& cfg, std::uint64_t seed) {
    if (corpus.empty()) throw std::invalid_argument("train_score_net: empty corpus");
    sde.check();
    Rng rng(seed);
    ScoreTrainResult result;
    result.params = ScoreNetParams::random_init(rng, corpus.feature_dim, cfg.hidden_dim);

    ScoreNetParams m_state = ScoreNetParams::zero_init(corpus.feature_dim, cfg.hidden_dim);
    ScoreNetParams v_state = ScoreNetParams::zero_init(corpus.feature_dim, cfg.hidden_dim);

    for (int step = 1; step <= cfg.steps; ++step) {
        const Graph& g = corpus.graphs[uniform_index(rng, corpus.size())];
        const double t = uniform_real(rng, cfg.t_min, 1.0);
        const double m = sde.mean_coef(t), sd = sde.std_dev(t);
        const Matrix eps_x = gaussian_matrix(rng, g.n, g.feature_dim());
        const Matrix eps_a = symmetric_noise(rng, g.n);
        const Matrix x_t = m * g.features + sd * eps_x;
        const Matrix a_t = m * g.adjacency + sd * eps_a;

        detail::ForwardCache cache;
        const auto pred = detail::predict_noise(result.params, a_t, x_t, t, &cache);

        const double nd = static_cast<double>(g.n * g.feature_dim());
        const double na = static_cast<double>(std::max<Eigen::Index>(1, g.n * (g.n - 1)));
        const Matrix d_eps_x = 2.0 * (pred.eps_x - eps_x) / nd;
        Matrix d_eps_a = 2.0 * (pred.eps_a - eps_a) / na;
        d_eps_a.diagonal().setZero();

        double loss = (pred.eps_x - eps_x).squaredNorm() / nd;
        if (g.n > 1) loss += (pred.eps_a - eps_a).squaredNorm() / na;
        result.loss_history.push_back(loss);

        ScoreNetParams grads = ScoreNetParams::zero_init(corpus.feature_dim, cfg.hidden_dim);
        detail::backprop(result.params, cache, d_eps_x, d_eps_a, grads);

        // Adam with bias correction.
        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
        const auto ws = result.params.tensors();
        const auto gs = grads.tensors();
        const auto ms = m_state.tensors();
        const auto vs = v_state.tensors();
        for (std::size_t k = 0; k < ws.size(); ++k) {
            *ms[k] = cfg.adam_beta1 * *ms[k] + (1.0 - cfg.adam_beta1) * *gs[k];
            *vs[k] = cfg.adam_beta2 * *vs[k] + (1.0 - cfg.adam_beta2) * gs[k]->cwiseProduct(*gs[k]);
            const Matrix m_hat = *ms[k] / bc1;
            const Matrix v_hat = *vs[k] / bc2;
            *ws[k] -= cfg.learning_rate *
                      (m_hat.array() / (v_hat.array().sqrt() + cfg.adam_eps)).matrix();
        }
    }
    return result;
}

}  // namespace graphood::diffusion
