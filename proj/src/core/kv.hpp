#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace dira {

// Canonical "key=value" text: one pair per line, keys sorted, trailing newline.
// Used for checkpoint metadata so files stay self-describing and diffable.
namespace kv {

using Map = std::map<std::string, std::string>;

inline std::string serialize(const Map& m) {
    std::string out;
    for (const auto& [k, v] : m) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

inline Map parse(const std::string& text) {
    Map m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("metadata line without '=': '" + line + "'");
        m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
}

inline const std::string& require(const Map& m, const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) throw FormatError("metadata missing key '" + key + "'");
    return it->second;
}

inline std::vector<int64_t> parse_int_list(const std::string& s) {
    std::vector<int64_t> out;
    if (s.empty()) return out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            out.push_back(std::stoll(tok));
        } catch (const std::exception&) {
            throw FormatError("metadata: bad integer '" + tok + "' in list '" + s + "'");
        }
    }
    return out;
}

inline std::string int_list(const std::vector<int64_t>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace kv
}  // namespace dira
