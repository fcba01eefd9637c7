#pragma once

#include "prym_data.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

namespace prymlab::io {

using json = nlohmann::json;

// Binary64 values travel as C99 hex-float strings so a reload is bit-exact.
inline std::string hex(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

inline double unhex(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) throw Error(Errc::ConfigError, path + ": expected a number or hex-float string");
    const std::string s = j.get<std::string>();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw Error(Errc::ConfigError, path + ": malformed float '" + s + "'");
    return v;
}

inline json to_json(cplx z) { return json::array({hex(z.real()), hex(z.imag())}); }

// Accepts [re, im], a bare real number, or hex-float strings in either slot.
inline cplx complex_from(const json& j, const std::string& path) {
    if (j.is_array()) {
        if (j.size() != 2) throw Error(Errc::ConfigError, path + ": complex value needs [re, im]");
        return {unhex(j[0], path + "[0]"), unhex(j[1], path + "[1]")};
    }
    return {unhex(j, path), 0.0};
}

inline json to_json(const CVec& v) {
    json a = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(to_json(v[k]));
    return a;
}

inline CVec cvec_from(const json& j, const std::string& path) {
    if (!j.is_array()) throw Error(Errc::ConfigError, path + ": expected an array");
    CVec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) v[k] = complex_from(j[k], path + "[" + std::to_string(k) + "]");
    return v;
}

inline json to_json(const CMat& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) rows.push_back(to_json(CVec(M.row(i).transpose())));
    return rows;
}

inline CMat cmat_from(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw Error(Errc::ConfigError, path + ": expected a nonempty matrix");
    const auto n = static_cast<Eigen::Index>(j.size());
    CMat M(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const CVec r = cvec_from(j[i], path + "[" + std::to_string(i) + "]");
        if (r.size() != n) throw Error(Errc::ConfigError, path + ": matrix is not square");
        M.row(i) = r.transpose();
    }
    return M;
}

inline const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw Error(Errc::ConfigError, path + "." + key + ": missing");
    return j.at(key);
}

// {"h_roots": [...]} or {"h_coeffs": [...]} (ascending powers of t).
inline DoubleCoverCurve curve_from(const json& j, const std::string& path) {
    if (j.contains("h_roots")) {
        const CVec r = cvec_from(j.at("h_roots"), path + ".h_roots");
        cplx lead = 1.0;
        if (j.contains("leading")) lead = complex_from(j.at("leading"), path + ".leading");
        return build_cover_from_roots(std::vector<cplx>(r.data(), r.data() + r.size()), lead);
    }
    if (j.contains("h_coeffs")) {
        const CVec c = cvec_from(j.at("h_coeffs"), path + ".h_coeffs");
        return build_cover(std::vector<cplx>(c.data(), c.data() + c.size()));
    }
    throw Error(Errc::ConfigError, path + ": needs h_roots or h_coeffs");
}

inline json to_json(const PrymData& d) {
    json m = json::array();
    for (auto x : d.marked_x) m.push_back(to_json(x));
    return json{{"Pi", to_json(d.Pi.matrix())}, {"A", to_json(d.A)},         {"U", to_json(d.U)},
                {"V", to_json(d.V)},             {"W", to_json(d.W)},         {"marked_x", m},
                {"extra_x", to_json(d.extra_x)}, {"base_point", to_json(d.base_point)}};
}

inline PrymData prym_data_from(const json& j, const std::string& path = "prym_data") {
    PrymData d;
    d.Pi = validate_period_matrix(cmat_from(field(j, "Pi", path), path + ".Pi"));
    d.A = cvec_from(field(j, "A", path), path + ".A");
    d.U = cvec_from(field(j, "U", path), path + ".U");
    d.V = cvec_from(field(j, "V", path), path + ".V");
    d.W = cvec_from(field(j, "W", path), path + ".W");
    for (const CVec* v : {&d.A, &d.U, &d.V, &d.W})
        if (v->size() != d.Pi.g()) throw Error(Errc::ConfigError, path + ": vector length differs from g");
    const auto& m = field(j, "marked_x", path);
    if (!m.is_array() || m.size() != 3) throw Error(Errc::ConfigError, path + ".marked_x: needs three values");
    for (std::size_t k = 0; k < 3; ++k) d.marked_x[k] = complex_from(m[k], path + ".marked_x");
    d.extra_x = complex_from(field(j, "extra_x", path), path + ".extra_x");
    d.base_point = complex_from(field(j, "base_point", path), path + ".base_point");
    return d;
}

} // namespace prymlab::io
