#pragma once

#include "io.hpp"
#include "pdo.hpp"

// JSON for windows, grids and operators, with hex floats so golden files reload bit-exactly.

namespace prymlab::io {

inline json to_json(const Window& w) { return json::array({w.n_lo, w.n_hi, w.m_lo, w.m_hi}); }

inline Window window_from(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4) throw Error(Errc::ConfigError, path + ": window needs [n_lo, n_hi, m_lo, m_hi]");
    for (const auto& x : j)
        if (!x.is_number_integer()) throw Error(Errc::ConfigError, path + ": window bounds must be integers");
    const Window w{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
    if (w.empty()) throw Error(Errc::ConfigError, path + ": empty window");
    return w;
}

// values row by row in n, each row over m
inline json to_json(const ComplexGrid& g) {
    const Window& w = g.window();
    json rows = json::array();
    for (int n = w.n_lo; n <= w.n_hi; ++n) {
        json row = json::array();
        for (int m = w.m_lo; m <= w.m_hi; ++m) row.push_back(to_json(g(n, m)));
        rows.push_back(std::move(row));
    }
    return {{"window", to_json(w)}, {"values", std::move(rows)}};
}

inline ComplexGrid grid_from(const json& j, const std::string& path) {
    const Window w = window_from(field(j, "window", path), path + ".window");
    const json& rows = field(j, "values", path);
    if (!rows.is_array() || rows.size() != std::size_t(w.n_size()))
        throw Error(Errc::ConfigError, path + ".values: expected one row per n");
    ComplexGrid g(w);
    for (int n = w.n_lo; n <= w.n_hi; ++n) {
        const std::string rp = path + ".values[" + std::to_string(n - w.n_lo) + "]";
        const json& row = rows[std::size_t(n - w.n_lo)];
        if (!row.is_array() || row.size() != std::size_t(w.m_size())) throw Error(Errc::ConfigError, rp + ": wrong length");
        for (int m = w.m_lo; m <= w.m_hi; ++m)
            g.ref(n, m) = complex_from(row[std::size_t(m - w.m_lo)], rp + "[" + std::to_string(m - w.m_lo) + "]");
    }
    return g;
}

inline json to_json(const PseudoDiffOp& d) {
    json terms = json::array();
    for (const auto& [k, g] : d.terms) terms.push_back({{"t1", k.first}, {"t2", k.second}, {"coeff", to_json(g)}});
    return {{"window", to_json(d.window)},
            {"expansion", d.expansion == Expansion::Descending ? "descending" : "ascending"},
            {"truncation", d.truncation ? json(*d.truncation) : json(nullptr)},
            {"terms", std::move(terms)}};
}

inline PseudoDiffOp op_from(const json& j, const std::string& path) {
    PseudoDiffOp d;
    d.window = window_from(field(j, "window", path), path + ".window");
    const json& e = field(j, "expansion", path);
    if (e == "descending")
        d.expansion = Expansion::Descending;
    else if (e == "ascending")
        d.expansion = Expansion::Ascending;
    else
        throw Error(Errc::ConfigError, path + ".expansion: expected \"descending\" or \"ascending\"");
    const json& t = field(j, "truncation", path);
    if (!t.is_null()) {
        if (!t.is_number_integer()) throw Error(Errc::ConfigError, path + ".truncation: expected an integer or null");
        d.truncation = t.get<int>();
    }
    const json& terms = field(j, "terms", path);
    if (!terms.is_array()) throw Error(Errc::ConfigError, path + ".terms: expected an array");
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const std::string tp = path + ".terms[" + std::to_string(k) + "]";
        const json& t1 = field(terms[k], "t1", tp);
        const json& t2 = field(terms[k], "t2", tp);
        if (!t1.is_number_integer() || !t2.is_number_integer()) throw Error(Errc::ConfigError, tp + ": exponents must be integers");
        const std::pair key{t1.get<int>(), t2.get<int>()};
        if (d.terms.count(key)) throw Error(Errc::ConfigError, tp + ": repeated exponent");
        if (d.truncation && !d.known(key.first)) throw Error(Errc::ConfigError, tp + ": exponent beyond the truncation");
        d.terms.emplace(key, grid_from(field(terms[k], "coeff", tp), tp + ".coeff"));
    }
    return d;
}

} // namespace prymlab::io
