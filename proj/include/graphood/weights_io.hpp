#pragma once

#include <atomic>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "graphood/diffusion.hpp"
#include "graphood/encoder.hpp"

namespace graphood::io {

// Weights files are JSON with a fixed key order, so identical parameters
// serialize to identical bytes. Tensor data is row-major.

inline std::atomic<long>& score_net_load_count() {
    static std::atomic<long> count{0};
    return count;
}

namespace detail {

inline nlohmann::ordered_json tensor_record(const Matrix& m) {
    nlohmann::ordered_json rec;
    rec["shape"] = {m.rows(), m.cols()};
    auto data = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    rec["data"] = std::move(data);
    return rec;
}

inline Matrix tensor_from_record(const nlohmann::json& rec) {
    const auto rows = rec.at("shape").at(0).get<Eigen::Index>();
    const auto cols = rec.at("shape").at(1).get<Eigen::Index>();
    const auto& data = rec.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw std::runtime_error("weights: tensor data size does not match shape");
    Matrix m(rows, cols);
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = data[idx++].get<double>();
    return m;
}

}  // namespace detail

inline std::string serialize_score_net(const diffusion::ScoreNetParams& params,
                                       const diffusion::SdeConfig& sde) {
    nlohmann::ordered_json doc;
    doc["format_version"] = params.format_version;
    doc["kind"] = "score_net";
    doc["sde"] = {{"beta_min", sde.beta_min}, {"beta_max", sde.beta_max}, {"num_steps", sde.num_steps}};
    doc["arch"] = {{"feature_dim", params.feature_dim},
                   {"hidden_dim", params.hidden_dim},
                   {"time_dim", params.time_dim}};
    nlohmann::ordered_json tensors;
    const auto ts = params.tensors();
    for (std::size_t k = 0; k < ts.size(); ++k)
        tensors[diffusion::ScoreNetParams::tensor_names[k]] = detail::tensor_record(*ts[k]);
    doc["tensors"] = std::move(tensors);
    return doc.dump();
}

struct ScoreNetFile {
    diffusion::ScoreNetParams params;
    diffusion::SdeConfig sde;
};

inline ScoreNetFile deserialize_score_net(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("kind").get<std::string>() != "score_net")
        throw std::runtime_error("weights: not a score_net file");
    ScoreNetFile out;
    out.sde.beta_min = doc.at("sde").at("beta_min").get<double>();
    out.sde.beta_max = doc.at("sde").at("beta_max").get<double>();
    out.sde.num_steps = doc.at("sde").at("num_steps").get<int>();
    out.params.format_version = doc.at("format_version").get<int>();
    out.params.feature_dim = doc.at("arch").at("feature_dim").get<Eigen::Index>();
    out.params.hidden_dim = doc.at("arch").at("hidden_dim").get<Eigen::Index>();
    out.params.time_dim = doc.at("arch").at("time_dim").get<Eigen::Index>();
    const auto& tensors = doc.at("tensors");
    const auto ts = out.params.tensors();
    for (std::size_t k = 0; k < ts.size(); ++k)
        *ts[k] = detail::tensor_from_record(tensors.at(diffusion::ScoreNetParams::tensor_names[k]));
    out.params.check();
    score_net_load_count().fetch_add(1);
    return out;
}

inline void save_score_net(const std::string& path, const diffusion::ScoreNetParams& params,
                           const diffusion::SdeConfig& sde) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << serialize_score_net(params, sde) << '\n';
}

inline ScoreNetFile load_score_net(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open weights file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return deserialize_score_net(buf.str());
}

inline const char* name_of(gnn::Aggregation a) {
    switch (a) {
        case gnn::Aggregation::sum: return "sum";
        case gnn::Aggregation::mean: return "mean";
        case gnn::Aggregation::max: return "max";
    }
    return "sum";
}
inline const char* name_of(gnn::Pooling p) {
    return p == gnn::Pooling::sum ? "sum" : "mean";
}
inline const char* name_of(gnn::Nonlinearity n) {
    return n == gnn::Nonlinearity::relu ? "relu" : "identity";
}

inline std::string serialize_encoder(const gnn::EncoderParams& params) {
    nlohmann::ordered_json doc;
    doc["format_version"] = 1;
    doc["kind"] = "encoder";
    doc["arch"] = {{"num_layers", params.num_layers()},
                   {"aggregation", name_of(params.aggregation)},
                   {"pooling", name_of(params.pooling)},
                   {"nonlinearity", name_of(params.nonlinearity)}};
    nlohmann::ordered_json tensors;
    for (Eigen::Index l = 0; l < params.num_layers(); ++l)
        tensors["layer_" + std::to_string(l)] = detail::tensor_record(params.weights[l]);
    doc["tensors"] = std::move(tensors);
    return doc.dump();
}

inline gnn::EncoderParams deserialize_encoder(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("kind").get<std::string>() != "encoder")
        throw std::runtime_error("weights: not an encoder file");
    gnn::EncoderParams params;
    const auto& arch = doc.at("arch");
    const std::string agg = arch.at("aggregation").get<std::string>();
    params.aggregation = agg == "mean"  ? gnn::Aggregation::mean
                         : agg == "max" ? gnn::Aggregation::max
                                        : gnn::Aggregation::sum;
    params.pooling =
        arch.at("pooling").get<std::string>() == "sum" ? gnn::Pooling::sum : gnn::Pooling::mean;
    params.nonlinearity = arch.at("nonlinearity").get<std::string>() == "identity"
                              ? gnn::Nonlinearity::identity
                              : gnn::Nonlinearity::relu;
    const auto layers = arch.at("num_layers").get<Eigen::Index>();
    for (Eigen::Index l = 0; l < layers; ++l)
        params.weights.push_back(
            detail::tensor_from_record(doc.at("tensors").at("layer_" + std::to_string(l))));
    params.check();
    return params;
}

inline void save_encoder(const std::string& path, const gnn::EncoderParams& params) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << serialize_encoder(params) << '\n';
}

inline gnn::EncoderParams load_encoder(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open encoder file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return deserialize_encoder(buf.str());
}

}  // namespace graphood::io
