#pragma once

#include "errors.hpp"
#include "linalg.hpp"

#include <algorithm>
#include <vector>

namespace prymlab {

// Gamma: y^2 = h(x^2) with sigma(x, y) = (-x, -y). Everything Prym-side is computed on
// the quotient E': v^2 = h(t), t = x^2, v = y.
struct DoubleCoverCurve {
    std::vector<cplx> h_coeffs;      // ascending powers of t
    std::vector<cplx> branch_points; // roots of h, sorted by real part then imaginary part
    int g = 0;                       // genus of E' (dimension of the Prym)
    double sheet_sign = 1.0;

    cplx leading() const { return h_coeffs.back(); }

    cplx h(cplx t) const {
        cplx s{0.0, 0.0};
        for (auto it = h_coeffs.rbegin(); it != h_coeffs.rend(); ++it) s = s * t + *it;
        return s;
    }

    // Square root of (t - e_{2k})(t - e_{2k+1}) with its cut on the segment between them
    // and asymptotic to t at infinity (k counts from 0).
    cplx pair_root(int k, cplx t) const {
        const cplx a = branch_points[2 * k], b = branch_points[2 * k + 1];
        return (t - a) * std::sqrt((t - b) / (t - a));
    }

    // Sheet 1 of v: analytic off the g+1 cuts [e_{2k}, e_{2k+1}].
    cplx v_sheet(cplx t) const {
        cplx v = sheet_sign * std::sqrt(leading());
        for (int k = 0; k <= g; ++k) v *= pair_root(k, t);
        return v;
    }

    double min_root_distance() const {
        double d = 1e300;
        for (std::size_t i = 0; i < branch_points.size(); ++i)
            for (std::size_t j = i + 1; j < branch_points.size(); ++j)
                d = std::min(d, std::abs(branch_points[i] - branch_points[j]));
        return d;
    }
};

namespace detail {

inline void sort_branch_points(std::vector<cplx>& r) {
    std::sort(r.begin(), r.end(), [](cplx a, cplx b) {
        if (std::abs(a.real() - b.real()) > 1e-9 * (1.0 + std::abs(a) + std::abs(b)))
            return a.real() < b.real();
        return a.imag() < b.imag();
    });
}

inline std::vector<cplx> roots_of(const std::vector<cplx>& c) {
    using LC = std::complex<long double>;
    const int d = static_cast<int>(c.size()) - 1;
    Eigen::Matrix<LC, Eigen::Dynamic, Eigen::Dynamic> comp =
        Eigen::Matrix<LC, Eigen::Dynamic, Eigen::Dynamic>::Zero(d, d);
    const LC lead(c[d].real(), c[d].imag());
    for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0L;
    for (int i = 0; i < d; ++i) comp(i, d - 1) = -LC(c[i].real(), c[i].imag()) / lead;
    Eigen::ComplexEigenSolver<Eigen::Matrix<LC, Eigen::Dynamic, Eigen::Dynamic>> es(comp, false);
    std::vector<cplx> out;
    for (int i = 0; i < d; ++i) {
        LC r = es.eigenvalues()[i];
        // Newton polish in extended precision
        for (int it = 0; it < 50; ++it) {
            LC p = 0.0L, dp = 0.0L;
            for (int k = d; k >= 0; --k) {
                dp = dp * r + p;
                p = p * r + LC(c[k].real(), c[k].imag());
            }
            if (std::abs(dp) == 0.0L) break;
            const LC step = p / dp;
            r -= step;
            if (std::abs(step) <= 1e-18L * (1.0L + std::abs(r))) break;
        }
        out.emplace_back(double(r.real()), double(r.imag()));
    }
    return out;
}

inline DoubleCoverCurve finish_cover(std::vector<cplx> coeffs, std::vector<cplx> roots) {
    DoubleCoverCurve c;
    c.h_coeffs = std::move(coeffs);
    c.g = static_cast<int>(roots.size()) / 2 - 1;
    sort_branch_points(roots);
    c.branch_points = std::move(roots);
    if (c.min_root_distance() <= 1e-8)
        throw Error(Errc::NotSquarefree, "two roots of h are closer than 1e-8");
    if (std::abs(c.h_coeffs[0]) <= 1e-10)
        throw Error(Errc::RamifiedAtZero, "h(0) vanishes, so the involution has fixed points");
    double re = -1e300;
    for (auto b : c.branch_points) re = std::max(re, b.real());
    const cplx anchor(re + 1.0, 0.0);
    c.sheet_sign = 1.0;
    const cplx v = c.v_sheet(anchor);
    if (v.real() < 0.0 || (v.real() == 0.0 && v.imag() < 0.0)) c.sheet_sign = -1.0;
    return c;
}

} // namespace detail

inline DoubleCoverCurve build_cover(const std::vector<cplx>& h_coeffs) {
    std::vector<cplx> c = h_coeffs;
    while (!c.empty() && c.back() == cplx(0.0)) c.pop_back();
    const int deg = static_cast<int>(c.size()) - 1;
    if (deg != 4 && deg != 6)
        throw Error(Errc::BadDegree, "h must have degree 4 or 6, got " + std::to_string(deg));
    auto roots = detail::roots_of(c);
    return detail::finish_cover(std::move(c), std::move(roots));
}

inline DoubleCoverCurve build_cover_from_roots(const std::vector<cplx>& roots, cplx leading = 1.0) {
    const int deg = static_cast<int>(roots.size());
    if (deg != 4 && deg != 6)
        throw Error(Errc::BadDegree, "h must have degree 4 or 6, got " + std::to_string(deg));
    std::vector<cplx> c{leading};
    for (auto r : roots) {
        std::vector<cplx> n(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            n[k + 1] += c[k];
            n[k] -= r * c[k];
        }
        c = std::move(n);
    }
    return detail::finish_cover(std::move(c), roots);
}

} // namespace prymlab
