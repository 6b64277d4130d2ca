#pragma once

#include <vector>

#include "graphood/graph.hpp"

namespace graphood::gnn {

enum class Aggregation { sum, mean, max };
enum class Pooling { sum, mean };
enum class Nonlinearity { relu, identity };

/// Message-passing encoder parameters: one weight matrix per layer with
/// chained dimensions, plus the aggregation/pooling/nonlinearity choices.
struct EncoderParams {
    std::vector<Matrix> weights;
    Aggregation aggregation = Aggregation::sum;
    Pooling pooling = Pooling::mean;
    Nonlinearity nonlinearity = Nonlinearity::relu;

    Eigen::Index num_layers() const { return static_cast<Eigen::Index>(weights.size()); }
    Eigen::Index input_dim() const { return weights.empty() ? 0 : weights.front().rows(); }
    Eigen::Index output_dim() const { return weights.empty() ? 0 : weights.back().cols(); }

    void check() const {
        if (weights.empty()) throw std::invalid_argument("encoder: at least one layer required");
        for (std::size_t l = 1; l < weights.size(); ++l)
            if (weights[l - 1].cols() != weights[l].rows())
                throw std::invalid_argument("encoder: layer dimensions do not chain");
    }
};

namespace detail {

// Self-plus-neighbour aggregation as an explicit n x n operator (sum/mean);
// linear in the node states, so the backward pass is its transpose.
inline Matrix aggregation_operator(const Matrix& adjacency, Aggregation kind) {
    const Eigen::Index n = adjacency.rows();
    Matrix s = adjacency + Matrix::Identity(n, n);
    if (kind == Aggregation::mean) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double denom = std::max(1e-12, std::abs(s.row(i).sum()));
            s.row(i) /= denom;
        }
    }
    return s;
}

inline Matrix max_aggregate(const Matrix& adjacency, const Matrix& h,
                            Matrix* argmax_out = nullptr) {
    const Eigen::Index n = h.rows(), d = h.cols();
    Matrix out(n, d);
    if (argmax_out) argmax_out->resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c) {
            double best = h(i, c);
            Eigen::Index best_j = i;
            for (Eigen::Index j = 0; j < n; ++j)
                if (adjacency(i, j) > 0.5 && h(j, c) > best) {
                    best = h(j, c);
                    best_j = j;
                }
            out(i, c) = best;
            if (argmax_out) (*argmax_out)(i, c) = static_cast<double>(best_j);
        }
    return out;
}

inline Matrix apply_nonlinearity(const Matrix& z, Nonlinearity kind) {
    return kind == Nonlinearity::relu ? relu(z) : z;
}

struct ForwardCache {
    std::vector<Matrix> pre_aggregate;   // H_l (input to layer l)
    std::vector<Matrix> aggregated;      // S H_l
    std::vector<Matrix> pre_activation;  // S H_l W_l
    std::vector<Matrix> argmax;          // max aggregation routing
};

inline Matrix forward_nodes(const Graph& g, const EncoderParams& p, ForwardCache* cache) {
    Matrix h = g.features;
    const Matrix op = p.aggregation == Aggregation::max
                          ? Matrix()
                          : aggregation_operator(g.adjacency, p.aggregation);
    for (const Matrix& w : p.weights) {
        if (h.cols() != w.rows())
            throw std::invalid_argument("encoder: feature dimension does not match layer input");
        Matrix agg;
        Matrix argmax;
        if (p.aggregation == Aggregation::max)
            agg = max_aggregate(g.adjacency, h, cache ? &argmax : nullptr);
        else
            agg = op * h;
        Matrix z = agg * w;
        if (cache) {
            cache->pre_aggregate.push_back(h);
            cache->aggregated.push_back(agg);
            cache->pre_activation.push_back(z);
            cache->argmax.push_back(std::move(argmax));
        }
        h = apply_nonlinearity(z, p.nonlinearity);
    }
    return h;
}

}  // namespace detail

/// Node embeddings after all message-passing rounds (no pooling).
inline Matrix node_embeddings(const Graph& g, const EncoderParams& params) {
    params.check();
    return detail::forward_nodes(g, params, nullptr);
}

/// Graph-level embedding: L aggregation rounds followed by pooling.
inline Vector encode(const Graph& g, const EncoderParams& params) {
    const Matrix h = node_embeddings(g, params);
    Vector z = h.colwise().sum().transpose();
    if (params.pooling == Pooling::mean) z /= static_cast<double>(g.n);
    if (!z.allFinite()) throw std::runtime_error("encoder: non-finite embedding");
    return z;
}

/// Cosine similarity in [-1, 1]; zero-norm inputs yield 0 and set the
/// degenerate flag when provided.
inline double cosine_similarity(const Vector& z1, const Vector& z2, bool* degenerate = nullptr) {
    if (z1.size() != z2.size())
        throw std::invalid_argument("cosine_similarity: length mismatch");
    if (degenerate) *degenerate = false;
    const double n1 = z1.norm(), n2 = z2.norm();
    if (n1 == 0.0 || n2 == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return z1.dot(z2) / (n1 * n2);
}

struct EncoderTrainConfig {
    int num_layers = 3;
    Eigen::Index hidden_dim = 32;
    double learning_rate = 1e-2;
    int epochs = 200;
    Aggregation aggregation = Aggregation::sum;
    Pooling pooling = Pooling::mean;
    Nonlinearity nonlinearity = Nonlinearity::relu;
};

struct EncoderTrainResult {
    EncoderParams params;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

namespace detail {

// Binary cross-entropy on edge logits s_ij = <e_i, e_j>, i < j, against the
// adjacency targets. Returns mean loss; fills d_embeddings when requested.
inline double edge_reconstruction_loss(const Graph& g, const Matrix& emb, Matrix* d_embeddings) {
    const Eigen::Index n = g.n;
    const Eigen::Index pairs = n * (n - 1) / 2;
    if (pairs == 0) return 0.0;
    if (d_embeddings) *d_embeddings = Matrix::Zero(emb.rows(), emb.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double s = emb.row(i).dot(emb.row(j));
            const double y = g.adjacency(i, j);
            loss += std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::abs(s)));
            if (d_embeddings) {
                const double sig = 1.0 / (1.0 + std::exp(-s));
                const double ds = (sig - y) / static_cast<double>(pairs);
                d_embeddings->row(i) += ds * emb.row(j);
                d_embeddings->row(j) += ds * emb.row(i);
            }
        }
    return loss / static_cast<double>(pairs);
}

inline void backward_nodes(const Graph& g, const EncoderParams& p, const ForwardCache& cache,
                           Matrix d_h, std::vector<Matrix>& d_weights) {
    const Matrix op = p.aggregation == Aggregation::max
                          ? Matrix()
                          : aggregation_operator(g.adjacency, p.aggregation);
    for (int l = static_cast<int>(p.weights.size()) - 1; l >= 0; --l) {
        Matrix d_z = d_h;
        if (p.nonlinearity == Nonlinearity::relu)
            d_z = d_z.cwiseProduct(
                (cache.pre_activation[l].array() > 0.0).cast<double>().matrix());
        d_weights[l] += cache.aggregated[l].transpose() * d_z;
        const Matrix d_agg = d_z * p.weights[l].transpose();
        if (p.aggregation == Aggregation::max) {
            d_h = Matrix::Zero(d_agg.rows(), d_agg.cols());
            const Matrix& routes = cache.argmax[l];
            for (Eigen::Index i = 0; i < d_agg.rows(); ++i)
                for (Eigen::Index c = 0; c < d_agg.cols(); ++c)
                    d_h(static_cast<Eigen::Index>(routes(i, c)), c) += d_agg(i, c);
        } else {
            d_h = op.transpose() * d_agg;
        }
    }
}

}  // namespace detail

/// Self-supervised training on the ID corpus: predict edges from embedding
/// inner products with BCE, plain per-graph gradient steps at a fixed rate.
/// Deterministic given the seed.
inline EncoderTrainResult train_encoder(const Corpus& corpus, const EncoderTrainConfig& cfg,
                                        std::uint64_t seed) {
    if (corpus.empty()) throw std::invalid_argument("train_encoder: empty corpus");
    if (cfg.num_layers < 1) throw std::invalid_argument("train_encoder: need at least one layer");

    Rng rng(seed);
    EncoderParams params;
    params.aggregation = cfg.aggregation;
    params.pooling = cfg.pooling;
    params.nonlinearity = cfg.nonlinearity;
    // Damped init: sum aggregation multiplies activations by roughly 1+degree
    // per layer, and the edge decoder squares the embedding scale. Starting
    // the logits near O(1) keeps the BCE out of its saturated regime.
    const double damp = 0.3;
    Eigen::Index in_dim = corpus.feature_dim;
    for (int l = 0; l < cfg.num_layers; ++l) {
        const Eigen::Index out_dim = cfg.hidden_dim;
        params.weights.push_back(
            gaussian_matrix(rng, in_dim, out_dim, damp / std::sqrt(static_cast<double>(in_dim))));
        in_dim = out_dim;
    }

    auto corpus_loss = [&](const EncoderParams& p) {
        double total = 0.0;
        for (const Graph& g : corpus.graphs) {
            const Matrix emb = detail::forward_nodes(g, p, nullptr);
            total += detail::edge_reconstruction_loss(g, emb, nullptr);
        }
        return total / static_cast<double>(corpus.size());
    };

    EncoderTrainResult result;
    result.initial_loss = corpus_loss(params);

    std::vector<Matrix> d_weights(params.weights.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const Graph& g : corpus.graphs) {
            detail::ForwardCache cache;
            const Matrix emb = detail::forward_nodes(g, params, &cache);
            Matrix d_emb;
            detail::edge_reconstruction_loss(g, emb, &d_emb);
            if (d_emb.size() == 0) continue;  // single-node graph, no pairs
            for (std::size_t l = 0; l < d_weights.size(); ++l)
                d_weights[l] = Matrix::Zero(params.weights[l].rows(), params.weights[l].cols());
            detail::backward_nodes(g, params, cache, d_emb, d_weights);
            for (std::size_t l = 0; l < params.weights.size(); ++l)
                params.weights[l] -= cfg.learning_rate * d_weights[l];
        }
    }

    result.final_loss = corpus_loss(params);
    result.params = std::move(params);
    return result;
}

}  // namespace graphood::gnn
