#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>

#include "graphood/common.hpp"

namespace graphood::config {

// Minimal TOML-subset reader covering what the experiment configs use:
// [section] and [dotted.section] tables, string/integer/float/boolean values,
// and # comments. Keys are exposed flat as "section.key".

using Value = std::variant<bool, std::int64_t, double, std::string>;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Table {
  public:
    void set(const std::string& key, Value v) { values_[key] = std::move(v); }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const bool* b = std::get_if<bool>(&it->second)) return *b;
        throw ConfigError("config key '" + key + "' is not a boolean");
    }
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
        throw ConfigError("config key '" + key + "' is not an integer");
    }
    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const auto* d = std::get_if<double>(&it->second)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&it->second))
            return static_cast<double>(*i);
        throw ConfigError("config key '" + key + "' is not a number");
    }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
        throw ConfigError("config key '" + key + "' is not a string");
    }

    const std::map<std::string, Value>& entries() const { return values_; }

  private:
    std::map<std::string, Value> values_;
};

namespace detail {

inline std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::string drop_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline Value parse_value(const std::string& raw, std::size_t line_no) {
    const std::string text = strip(raw);
    if (text.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty value");
    if (text.front() == '"') {
        if (text.size() < 2 || text.back() != '"')
            throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
        return text.substr(1, text.size() - 2);
    }
    if (text == "true") return true;
    if (text == "false") return false;
    if (text.find_first_of(".eE") == std::string::npos) {
        std::int64_t i = 0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), i);
        if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return i;
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(text, &used);
        if (used == text.size()) return d;
    } catch (...) {
    }
    throw ConfigError("line " + std::to_string(line_no) + ": cannot parse value '" + text + "'");
}

}  // namespace detail

inline Table parse(std::istream& in) {
    Table table;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = detail::strip(detail::drop_comment(line));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            section = detail::strip(text.substr(1, text.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::strip(text.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        table.set(full, detail::parse_value(text.substr(eq + 1), line_no));
    }
    return table;
}

inline Table parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

inline Table load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in);
}

}  // namespace graphood::config
