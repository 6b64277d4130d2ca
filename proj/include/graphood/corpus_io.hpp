#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"

#include "graphood/graph.hpp"

namespace graphood {

// Corpus files are line-delimited JSON, one graph per line:
//   {"id": "...", "n": 3, "edges": [[0,1],[1,2]], "x": [[...],[...],[...]], "label": 1}
// Edges are undirected pairs with i < j; "label" is optional (1=ID, 0=OOD).

struct CorpusParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline Graph graph_from_record(const nlohmann::json& rec, std::size_t line_no) {
    auto fail = [&](const std::string& msg) -> void {
        throw CorpusParseError("line " + std::to_string(line_no) + ": " + msg);
    };

    if (!rec.is_object()) fail("record must be a JSON object");
    if (!rec.contains("id") || !rec["id"].is_string()) fail("missing string field 'id'");
    if (!rec.contains("n") || !rec["n"].is_number_integer()) fail("missing integer field 'n'");
    const auto n = rec["n"].get<Eigen::Index>();
    if (n < 1) fail("'n' must be positive");
    if (!rec.contains("edges") || !rec["edges"].is_array()) fail("missing array field 'edges'");
    if (!rec.contains("x") || !rec["x"].is_array()) fail("missing array field 'x'");

    const auto& xrows = rec["x"];
    if (static_cast<Eigen::Index>(xrows.size()) != n) fail("'x' must have exactly n rows");
    const Eigen::Index d = xrows.empty() ? 0 : static_cast<Eigen::Index>(xrows[0].size());
    if (d < 1) fail("feature rows must be nonempty");
    Matrix features(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = xrows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
            fail("feature rows must all have the same length");
        for (Eigen::Index j = 0; j < d; ++j) {
            const auto& v = row[static_cast<std::size_t>(j)];
            if (!v.is_number()) fail("feature entries must be numbers");
            features(i, j) = v.get<double>();
        }
    }
    if (!features.allFinite()) fail("feature entries must be finite");

    std::vector<std::pair<int, int>> edges;
    for (const auto& e : rec["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            fail("edges must be [i,j] integer pairs");
        const int i = e[0].get<int>();
        const int j = e[1].get<int>();
        if (i == j) fail("self-loop edge [" + std::to_string(i) + "," + std::to_string(j) + "]");
        if (i < 0 || j < 0 || i >= n || j >= n) fail("edge index out of range");
        if (i >= j) fail("edges must be ordered pairs with i < j");
        edges.emplace_back(i, j);
    }

    Graph g = graph_from_edges(n, edges, std::move(features), rec["id"].get<std::string>());
    const auto report = validate(g);
    if (!report.ok()) fail("graph fails validation: " + report.to_string());
    return g;
}

}  // namespace detail

/// Label attached to a test graph (1 = ID, 0 = OOD); absent when the corpus
/// carries no ground truth.
inline std::optional<int> record_label(const nlohmann::json& rec) {
    if (rec.contains("label") && rec["label"].is_number_integer()) return rec["label"].get<int>();
    return std::nullopt;
}

struct LabeledCorpus {
    Corpus corpus;
    std::vector<std::optional<int>> labels;  // aligned with corpus.graphs
};

inline LabeledCorpus parse_corpus(std::istream& in, CorpusRole role) {
    LabeledCorpus out;
    out.corpus.role = role;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw CorpusParseError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        Graph g = detail::graph_from_record(rec, line_no);
        if (out.corpus.graphs.empty()) {
            out.corpus.feature_dim = g.feature_dim();
        } else if (g.feature_dim() != out.corpus.feature_dim) {
            throw CorpusParseError("line " + std::to_string(line_no) +
                                   ": feature dimension " + std::to_string(g.feature_dim()) +
                                   " differs from corpus dimension " +
                                   std::to_string(out.corpus.feature_dim));
        }
        out.labels.push_back(record_label(rec));
        out.corpus.graphs.push_back(std::move(g));
    }
    return out;
}

inline LabeledCorpus load_labeled_corpus(const std::string& path, CorpusRole role) {
    std::ifstream in(path);
    if (!in) throw CorpusParseError("cannot open corpus file: " + path);
    return parse_corpus(in, role);
}

inline Corpus load_corpus(const std::string& path, CorpusRole role) {
    return load_labeled_corpus(path, role).corpus;
}

inline nlohmann::ordered_json graph_record(const Graph& g, std::optional<int> label = std::nullopt) {
    nlohmann::ordered_json rec;
    rec["id"] = g.id;
    rec["n"] = g.n;
    auto edges = nlohmann::ordered_json::array();
    for (const auto& [i, j] : edge_list(g)) edges.push_back({i, j});
    rec["edges"] = std::move(edges);
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < g.n; ++i) {
        auto row = nlohmann::ordered_json::array();
        for (Eigen::Index j = 0; j < g.feature_dim(); ++j) row.push_back(g.features(i, j));
        rows.push_back(std::move(row));
    }
    rec["x"] = std::move(rows);
    if (label) rec["label"] = *label;
    return rec;
}

inline void serialize_corpus(std::ostream& out, const Corpus& corpus,
                             const std::vector<std::optional<int>>* labels = nullptr) {
    for (std::size_t i = 0; i < corpus.graphs.size(); ++i) {
        std::optional<int> label;
        if (labels && i < labels->size()) label = (*labels)[i];
        out << graph_record(corpus.graphs[i], label).dump() << '\n';
    }
}

inline void save_corpus(const std::string& path, const Corpus& corpus,
                        const std::vector<std::optional<int>>* labels = nullptr) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    serialize_corpus(out, corpus, labels);
}

inline std::string corpus_to_string(const Corpus& corpus,
                                    const std::vector<std::optional<int>>* labels = nullptr) {
    std::ostringstream os;
    serialize_corpus(os, corpus, labels);
    return os.str();
}

}  // namespace graphood
