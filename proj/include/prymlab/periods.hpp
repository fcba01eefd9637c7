#pragma once

#include "curve.hpp"
#include "quadrature.hpp"
#include "theta.hpp"

#include <optional>

namespace prymlab {

// Cuts [e_{2k-1}, e_{2k}] (k = 1..g+1) and gaps [e_{2k}, e_{2k+1}] joined into one polyline.
// a_k encircles cut k; b_k is the sum of the gap cycles j = k..g, each running out along
// gap j on sheet 1 and back on sheet 2. Requires the polyline to be simple.
struct CycleBasis {
    int g = 0;
    std::vector<cplx> branch_points;
    // +1 or -1: orientation of the b-cycles, fixed so that Im Pi > 0
    double b_orientation = 1.0;
};

struct PeriodResult {
    PeriodMatrix Pi;
    CMat a_periods;   // half-loop a-periods: row = differential t^i dt/v, column = cycle
    CMat b_periods;   // half-loop b-periods, same layout
    CycleBasis basis;
    int quad_order = 0;
    double symmetry_residual = 0.0;
};

namespace detail {

// Integral of t^i dt / v over the straight segment p -> q where v vanishes like a square
// root at both ends. phi(s) = v(t(s)) / sqrt(1 - s^2) must be supplied; Gauss-Chebyshev
// absorbs the endpoint singularities.
template <class Phi>
CVec chebyshev_segment(int g, cplx p, cplx q, Phi&& phi, int n) {
    const cplx c = 0.5 * (p + q), r = 0.5 * (q - p);
    CVec acc = CVec::Zero(g);
    for (double s : quad::chebyshev_nodes(n)) {
        const cplx t = c + r * s;
        const cplx f = 1.0 / phi(s, t);
        cplx tp = 1.0;
        for (int i = 0; i < g; ++i) {
            acc[i] += tp * f;
            tp *= t;
        }
    }
    return acc * (r * pi / double(n));
}

// Integral over cut k (0-based) using v on the side right of p -> q, i.e. -v_left.
inline CVec cut_integral(const DoubleCoverCurve& C, int k, int n, cplx shift_start = 0.0) {
    const cplx p = C.branch_points[2 * k] + shift_start, q = C.branch_points[2 * k + 1];
    const cplx r = 0.5 * (q - p);
    // sign of the own factor's boundary value on the left side at the midpoint
    const cplx mid = 0.5 * (p + q);
    const cplx nrm = I * r / std::abs(r);
    const cplx probe = C.pair_root(k, mid + 1e-9 * std::abs(r) * nrm);
    const double side = (probe / (I * r)).real() > 0.0 ? 1.0 : -1.0;
    auto phi = [&](double, cplx t) {
        cplx v = C.sheet_sign * std::sqrt(C.leading()) * (-side) * I * r;
        for (int j = 0; j <= C.g; ++j)
            if (j != k) v *= C.pair_root(j, t);
        return v;
    };
    return chebyshev_segment(C.g, p, q, phi, n);
}

// Integral over gap k: from e_{2k+1} to e_{2k+2} (0-based branch indices), v on sheet 1.
inline CVec gap_integral(const DoubleCoverCurve& C, int k, int n) {
    const cplx p = C.branch_points[2 * k + 1], q = C.branch_points[2 * k + 2];
    auto phi = [&](double s, cplx t) { return C.v_sheet(t) / std::sqrt(1.0 - s * s); };
    return chebyshev_segment(C.g, p, q, phi, n);
}

struct RawPeriods {
    CMat a, bsum;
};

inline RawPeriods raw_periods(const DoubleCoverCurve& C, int n, cplx shift_first = 0.0) {
    const int g = C.g;
    RawPeriods r{CMat(g, g), CMat(g, g)};
    std::vector<CVec> cuts, gaps;
    for (int k = 0; k <= g; ++k) cuts.push_back(cut_integral(C, k, n, k == 0 ? shift_first : 0.0));
    for (int k = 0; k < g; ++k) gaps.push_back(gap_integral(C, k, n));
    for (int k = 0; k < g; ++k) {
        r.a.col(k) = cuts[k];
        CVec b = CVec::Zero(g);
        for (int j = k; j < g; ++j) b += gaps[j];
        r.bsum.col(k) = b;
    }
    return r;
}

inline double condition_number(const CMat& M) {
    Eigen::JacobiSVD<CMat> svd(M);
    const auto& s = svd.singularValues();
    return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : 1e300;
}

} // namespace detail

inline PeriodResult period_matrix(const DoubleCoverCurve& C, int quad_order = 64,
                                  cplx shift_first_endpoint = 0.0) {
    const int g = C.g;
    int n = quad_order;
    auto prev = detail::raw_periods(C, n, shift_first_endpoint);
    for (;;) {
        if (n > (1 << 16))
            throw Error(Errc::QuadratureNoConvergence, "period quadrature did not settle");
        auto next = detail::raw_periods(C, 2 * n, shift_first_endpoint);
        const double da = (next.a - prev.a).cwiseAbs().maxCoeff();
        const double db = (next.bsum - prev.bsum).cwiseAbs().maxCoeff();
        prev = next;
        n *= 2;
        if (da < 1e-10 && db < 1e-10) break;
    }
    if (detail::condition_number(prev.a) > 1e10)
        throw Error(Errc::SingularAPeriods, "a-period matrix is numerically singular");

    CMat Pi = prev.a.lu().solve(prev.bsum);
    double orient = 1.0;
    if (RMat(Pi.imag()).trace() < 0.0) {
        orient = -1.0;
        Pi = -Pi;
    }
    PeriodResult out;
    out.a_periods = prev.a;
    out.b_periods = orient * prev.bsum;
    out.basis = CycleBasis{g, C.branch_points, orient};
    out.quad_order = n;
    out.symmetry_residual = (Pi - Pi.transpose()).cwiseAbs().maxCoeff();
    if (out.symmetry_residual > 1e-8)
        throw Error(Errc::NotSymmetric, "period matrix asymmetric by " + std::to_string(out.symmetry_residual));
    CMat S = 0.5 * (Pi + Pi.transpose());
    out.Pi = validate_period_matrix(S);
    return out;
}

// Period ratio of a quartic with real roots from the arithmetic-geometric mean.
inline cplx agm(cplx a, cplx b) {
    for (int it = 0; it < 100; ++it) {
        const cplx an = 0.5 * (a + b);
        cplx bn = std::sqrt(a * b);
        if (std::abs(an - bn) > std::abs(an + bn)) bn = -bn;
        a = an;
        b = bn;
        if (std::abs(a - b) <= 1e-17 * std::abs(a)) break;
    }
    return a;
}

struct EllipticCrossCheck {
    cplx quadrature_ratio;
    cplx agm_ratio;
    double discrepancy = 0.0;
    bool supported = true;
};

inline EllipticCrossCheck cross_check_elliptic(const DoubleCoverCurve& C, cplx endpoint_shift = 0.0) {
    EllipticCrossCheck r;
    if (C.g != 1) {
        r.supported = false;
        return r;
    }
    for (auto e : C.branch_points)
        if (std::abs(e.imag()) > 1e-14) r.supported = false;
    const auto res = period_matrix(C, 64, endpoint_shift);
    r.quadrature_ratio = res.Pi.matrix()(0, 0);
    if (!r.supported) return r;
    const double d = C.branch_points[0].real(), c = C.branch_points[1].real();
    const double b = C.branch_points[2].real(), a = C.branch_points[3].real();
    const double den = (a - c) * (b - d);
    const double k = std::sqrt((b - c) * (a - d) / den), kp = std::sqrt((a - b) * (c - d) / den);
    // K(k)/K(k') = AGM(1,k)/AGM(1,k')
    r.agm_ratio = I * agm(1.0, k) / agm(1.0, kp);
    r.discrepancy = std::abs(r.agm_ratio - r.quadrature_ratio);
    return r;
}

} // namespace prymlab
