#pragma once

// Line-oriented model files and builtin model references.
//
//   # comment
//   kind linear
//   dim 2
//   matrix
//   -1 1
//   1 -1
//   y0 2 1
//
// A document whose first significant line is `builtin:<name>[?k=v&...]`
// resolves to one of the reference problems.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pdsint/errors.hpp"
#include "pdsint/linalg.hpp"
#include "pdsint/pds.hpp"

namespace pdsint {

struct ModelDocument {
    enum class Kind { linear, builtin };

    Kind kind = Kind::linear;
    std::string builtin_name;               // builtin only
    std::map<std::string, double> params;   // builtin only, explicit query values
    std::size_t dimension = 0;
    Matrix matrix;
    Vector y0;

    LinearPds model() const { return LinearPds(matrix); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(std::string_view tok, std::size_t line) {
    const std::string s(tok);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ParseError(line, "not a number: '" + s + "'");
    if (!std::isfinite(v) || errno == ERANGE) throw ParseError(line, "non-finite literal: '" + s + "'");
    return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double param_or(const std::map<std::string, double>& p, const std::string& key, double fallback) {
    const auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

inline ModelDocument resolve_builtin(std::string_view ref, std::size_t line) {
    ModelDocument doc;
    doc.kind = ModelDocument::Kind::builtin;
    const auto q = ref.find('?');
    doc.builtin_name = std::string(ref.substr(0, q));
    if (q != std::string_view::npos) {
        std::string_view query = ref.substr(q + 1);
        while (!query.empty()) {
            const auto amp = query.find('&');
            const auto kv = query.substr(0, amp);
            const auto eq = kv.find('=');
            if (eq == std::string_view::npos || eq == 0)
                throw ParseError(line, "malformed builtin parameter '" + std::string(kv) + "'");
            doc.params[std::string(kv.substr(0, eq))] = parse_real(kv.substr(eq + 1), line);
            if (amp == std::string_view::npos) break;
            query = query.substr(amp + 1);
        }
    }
    auto allow = [&](std::initializer_list<const char*> keys) {
        for (const auto& [k, v] : doc.params) {
            bool ok = false;
            for (const char* a : keys) ok = ok || k == a;
            if (!ok) throw ParseError(line, "unknown parameter '" + k + "' for builtin " + doc.builtin_name);
        }
    };
    try {
        if (doc.builtin_name == "paper-2x2") {
            allow({"a", "b", "c"});
            doc.matrix = two_species_matrix(param_or(doc.params, "a", 1.0), param_or(doc.params, "b", 1.0),
                                            param_or(doc.params, "c", 1.0));
            doc.y0 = {2.0, 1.0};
        } else if (doc.builtin_name == "paper-5x5") {
            allow({});
            doc.matrix = five_species_matrix();
            doc.y0 = five_species_start();
        } else if (doc.builtin_name == "paper-stiff") {
            allow({"K"});
            doc.matrix = stiff_chain_matrix(param_or(doc.params, "K", 10.0));
            doc.y0 = stiff_chain_start();
        } else if (doc.builtin_name == "random") {
            allow({"seed", "n"});
            const double seed = param_or(doc.params, "seed", 0.0);
            const double n = param_or(doc.params, "n", 5.0);
            if (seed < 0 || seed != std::floor(seed)) throw ParseError(line, "seed must be a nonnegative integer");
            if (n < 2 || n > 64 || n != std::floor(n)) throw ParseError(line, "n must be an integer in [2, 64]");
            doc.matrix = random_metzler_system(static_cast<std::uint64_t>(seed), static_cast<std::size_t>(n)).matrix();
            doc.y0.assign(static_cast<std::size_t>(n), 1.0);
        } else {
            throw ParseError(line, "unknown builtin '" + doc.builtin_name + "'");
        }
    } catch (const ParseError&) {
        throw;
    } catch (const ModelError& e) {
        throw ParseError(line, e.what());
    }
    doc.dimension = doc.matrix.rows();
    return doc;
}

}  // namespace detail

/// Parses a model document (file contents or a builtin reference).
inline ModelDocument parse_model(std::string_view text) {
    struct Line {
        std::size_t number;
        std::string_view body;
    };
    std::vector<Line> lines;
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++number;
        const auto hash = raw.find('#');
        if (hash != std::string_view::npos) raw = raw.substr(0, hash);
        raw = detail::trim(raw);
        if (!raw.empty()) lines.push_back({number, raw});
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (lines.empty()) throw ParseError(number == 0 ? 1 : number, "empty model document");

    std::size_t cur = 0;
    if (lines[0].body.starts_with("builtin:")) {
        if (lines.size() > 1) throw ParseError(lines[1].number, "unexpected content after builtin reference");
        return detail::resolve_builtin(lines[0].body.substr(8), lines[0].number);
    }

    std::size_t ln = 0;  // line of the keyword just consumed
    auto expect_keyword = [&](std::string_view key) -> std::vector<std::string_view> {
        if (cur >= lines.size())
            throw ParseError(number, "unexpected end of input, expected '" + std::string(key) + "'");
        auto toks = detail::split_ws(lines[cur].body);
        ln = lines[cur].number;
        if (toks.empty() || toks[0] != key) throw ParseError(ln, "expected '" + std::string(key) + "'");
        ++cur;
        return toks;
    };

    ModelDocument doc;
    auto toks = expect_keyword("kind");
    if (toks.size() != 2 || toks[1] != "linear") throw ParseError(ln, "only 'kind linear' is supported");

    toks = expect_keyword("dim");
    if (toks.size() != 2) throw ParseError(ln, "expected 'dim N'");
    const double d = detail::parse_real(toks[1], ln);
    if (d < 1 || d > 64 || d != std::floor(d)) throw ParseError(ln, "dimension must be an integer in [1, 64]");
    doc.dimension = static_cast<std::size_t>(d);
    const std::size_t n = doc.dimension;

    toks = expect_keyword("matrix");
    if (toks.size() != 1) throw ParseError(ln, "'matrix' takes no arguments");
    doc.matrix = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (cur >= lines.size())
            throw ParseError(number, "dimension mismatch: expected " + std::to_string(n) + " matrix rows");
        const auto row = detail::split_ws(lines[cur].body);
        if (row.size() != n || row[0] == "y0")
            throw ParseError(lines[cur].number,
                             "dimension mismatch: expected " + std::to_string(n) + " entries in matrix row");
        for (std::size_t j = 0; j < n; ++j) doc.matrix(i, j) = detail::parse_real(row[j], lines[cur].number);
        ++cur;
    }

    toks = expect_keyword("y0");
    if (toks.size() != n + 1)
        throw ParseError(ln, "dimension mismatch: expected " + std::to_string(n) + " y0 entries");
    doc.y0.resize(n);
    for (std::size_t j = 0; j < n; ++j) doc.y0[j] = detail::parse_real(toks[j + 1], ln);
    if (cur != lines.size()) throw ParseError(lines[cur].number, "unexpected content after 'y0'");
    return doc;
}

/// Inverse of parse_model; reals are written with 17 significant digits.
inline std::string serialize_model(const ModelDocument& doc) {
    std::ostringstream os;
    if (doc.kind == ModelDocument::Kind::builtin) {
        os << "builtin:" << doc.builtin_name;
        char sep = '?';
        for (const auto& [k, v] : doc.params) {
            os << sep << k << '=' << detail::format_real(v);
            sep = '&';
        }
        os << '\n';
        return os.str();
    }
    os << "kind linear\n";
    os << "dim " << doc.dimension << '\n';
    os << "matrix\n";
    for (std::size_t i = 0; i < doc.matrix.rows(); ++i) {
        for (std::size_t j = 0; j < doc.matrix.cols(); ++j) {
            if (j) os << ' ';
            os << detail::format_real(doc.matrix(i, j));
        }
        os << '\n';
    }
    os << "y0";
    for (double v : doc.y0) os << ' ' << detail::format_real(v);
    os << '\n';
    return os.str();
}

}  // namespace pdsint
