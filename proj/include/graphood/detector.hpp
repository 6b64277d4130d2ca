#pragma once

#include <chrono>
#include <fstream>
#include <sstream>

#include "graphood/encoder.hpp"
#include "graphood/metrics.hpp"
#include "graphood/prototype.hpp"

namespace graphood::detect {

/// One scored test graph. PGR scoring never integrates the reverse SDE, so
/// reverse_steps_used stays 0 on that path.
struct JudgeScore {
    std::string graph_id;
    double score = 0.0;
    std::string method;
    double elapsed_ms = 0.0;
    long reverse_steps_used = 0;
};

enum class Verdict { ID, OOD };

namespace detail {
inline double elapsed_ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}
}  // namespace detail

/// Max prototype similarity (the PGR judge). No diffusion model is touched.
inline JudgeScore judge_score_pgr(const Graph& g_test, const proto::PrototypeList& pl,
                                  const fgw::FgwConfig& cfg) {
    if (pl.prototypes.empty()) throw std::invalid_argument("judge_score_pgr: empty prototype list");
    const auto start = std::chrono::steady_clock::now();
    double best = 0.0;
    for (const Graph& proto : pl.prototypes)
        best = std::max(best, fgw::similarity(proto, g_test, cfg));
    JudgeScore out;
    out.graph_id = g_test.id;
    out.score = best;
    out.method = "pgr";
    out.elapsed_ms = detail::elapsed_ms_since(start);
    out.reverse_steps_used = 0;
    return out;
}

/// Ablation variant: max cosine similarity between encoder embeddings of the
/// prototypes and the test graph.
inline JudgeScore judge_score_pgr_cosine(const Graph& g_test, const proto::PrototypeList& pl,
                                         const gnn::EncoderParams& encoder) {
    if (pl.prototypes.empty())
        throw std::invalid_argument("judge_score_pgr_cosine: empty prototype list");
    const auto start = std::chrono::steady_clock::now();
    const Vector z_test = gnn::encode(g_test, encoder);
    double best = -1.0;
    for (const Graph& proto : pl.prototypes)
        best = std::max(best, gnn::cosine_similarity(gnn::encode(proto, encoder), z_test));
    JudgeScore out;
    out.graph_id = g_test.id;
    out.score = best;
    out.method = "pgr_cosine";
    out.elapsed_ms = detail::elapsed_ms_since(start);
    out.reverse_steps_used = 0;
    return out;
}

/// Reconstruction baseline judge: perturb, denoise, compare embeddings.
inline JudgeScore judge_score_gr(const Graph& g_test, const diffusion::ScoreNetParams& params,
                                 const gnn::EncoderParams& encoder,
                                 const diffusion::SdeConfig& sde, double t_perturb, Rng& rng) {
    const auto start = std::chrono::steady_clock::now();
    const Graph rec = diffusion::reconstruct(g_test, params, sde, t_perturb, rng);
    const Vector z = gnn::encode(g_test, encoder);
    const Vector z_hat = gnn::encode(rec, encoder);
    JudgeScore out;
    out.graph_id = g_test.id;
    out.score = gnn::cosine_similarity(z, z_hat);
    out.method = "gr_baseline";
    out.elapsed_ms = detail::elapsed_ms_since(start);
    out.reverse_steps_used = sde.num_steps;
    return out;
}

/// Threshold rule: ID iff the judge score strictly exceeds tau; the boundary
/// itself goes to OOD.
inline Verdict threshold_detect(const JudgeScore& j, double tau) {
    return j.score > tau ? Verdict::ID : Verdict::OOD;
}

using metrics::score_gap;

// Scores file: "graph_id,score,method,elapsed_ms,reverse_steps" with one
// header line. Scores carry full precision; timing is always rounded.
inline void write_scores(std::ostream& out, const std::vector<JudgeScore>& scores) {
    out << "graph_id,score,method,elapsed_ms,reverse_steps\n";
    char buf[64];
    for (const JudgeScore& j : scores) {
        std::snprintf(buf, sizeof(buf), "%.17g", j.score);
        out << j.graph_id << ',' << buf << ',' << j.method << ',';
        std::snprintf(buf, sizeof(buf), "%.3f", j.elapsed_ms);
        out << buf << ',' << j.reverse_steps_used << '\n';
    }
}

inline void save_scores(const std::string& path, const std::vector<JudgeScore>& scores) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    write_scores(out, scores);
}

inline std::vector<JudgeScore> parse_scores(std::istream& in) {
    std::vector<JudgeScore> scores;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("scores file is empty");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        JudgeScore j;
        std::string field;
        if (!std::getline(ls, j.graph_id, ',')) continue;
        if (!std::getline(ls, field, ','))
            throw std::runtime_error("scores line " + std::to_string(line_no) + ": missing score");
        j.score = std::stod(field);
        if (!std::getline(ls, j.method, ','))
            throw std::runtime_error("scores line " + std::to_string(line_no) + ": missing method");
        if (!std::getline(ls, field, ','))
            throw std::runtime_error("scores line " + std::to_string(line_no) + ": missing elapsed");
        j.elapsed_ms = std::stod(field);
        if (!std::getline(ls, field))
            throw std::runtime_error("scores line " + std::to_string(line_no) + ": missing steps");
        j.reverse_steps_used = std::stol(field);
        scores.push_back(std::move(j));
    }
    return scores;
}

inline std::vector<JudgeScore> load_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scores file: " + path);
    return parse_scores(in);
}

}  // namespace graphood::detect
