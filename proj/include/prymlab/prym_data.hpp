#pragma once

#include "periods.hpp"

#include <array>

namespace prymlab {

struct CurvePoint {
    cplx x; // coordinate on Gamma
    cplx y;
};

inline CurvePoint sigma(const CurvePoint& P) { return {-P.x, -P.y}; }

// Distance from w to the nearest point of Z^g + Pi Z^g.
inline double lattice_distance(const PeriodMatrix& Pi, const CVec& w) {
    const RVec q = Pi.imag_inverse() * w.imag();
    const RVec p = w.real() - Pi.matrix().real() * q;
    RVec qr = q, pr = p;
    for (Eigen::Index k = 0; k < q.size(); ++k) qr[k] = std::round(q[k]), pr[k] = std::round(p[k]);
    return (w - pr.cast<cplx>() - Pi.matrix() * qr.cast<cplx>()).norm();
}

struct AbelOptions {
    int quad_order = 64;
    double clearance = 1e-2;
};

namespace detail {

inline double distance_to_segment(cplx b, cplx p, cplx q) {
    const cplx d = q - p;
    const double len2 = std::norm(d);
    if (len2 == 0.0) return std::abs(b - p);
    double s = ((b - p) * std::conj(d)).real() / len2;
    s = std::clamp(s, 0.0, 1.0);
    return std::abs(b - (p + s * d));
}

// Polyline from the base branch point to t, pushed away from the other branch points.
inline std::vector<cplx> route(const DoubleCoverCurve& C, cplx t, std::vector<cplx> via,
                               double clearance) {
    std::vector<cplx> pts{C.branch_points[0]};
    pts.insert(pts.end(), via.begin(), via.end());
    pts.push_back(t);
    for (int attempt = 0; attempt < 64; ++attempt) {
        bool changed = false;
        for (std::size_t s = 0; s + 1 < pts.size() && !changed; ++s) {
            for (std::size_t b = 0; b < C.branch_points.size(); ++b) {
                const cplx e = C.branch_points[b];
                if (s == 0 && b == 0) continue; // the path starts there
                if (distance_to_segment(e, pts[s], pts[s + 1]) >= clearance) continue;
                double nearest = 1e300;
                for (auto o : C.branch_points)
                    if (o != e) nearest = std::min(nearest, std::abs(o - e));
                const cplx d = pts[s + 1] - pts[s];
                const cplx nrm = I * d / std::abs(d);
                const double off = std::max(4.0 * clearance, 0.2 * nearest);
                pts.insert(pts.begin() + s + 1, e + off * nrm);
                changed = true;
                break;
            }
        }
        if (!changed) return pts;
    }
    throw Error(Errc::PathThroughBranchPoint, "could not route the Abel path around the branch points");
}

inline double branch_distance(const DoubleCoverCurve& C, cplx t) {
    double d = 1e300;
    for (auto e : C.branch_points) d = std::min(d, std::abs(t - e));
    return d;
}

// Integrals of t^i dt / v along the polyline, v continued from sheet 1 at the base.
// Returns the integrals together with the continued v at the end point.
inline std::pair<CVec, cplx> path_integral(const DoubleCoverCurve& C, const std::vector<cplx>& pts,
                                           int n) {
    const int g = C.g;
    const auto& rule = quad::gauss_legendre_cached(n);
    CVec acc = CVec::Zero(g);
    auto add = [&](cplx t, cplx weight_over_v) {
        cplx tp = 1.0;
        for (int i = 0; i < g; ++i) {
            acc[i] += tp * weight_over_v;
            tp *= t;
        }
    };
    const cplx e1 = C.branch_points[0];
    double d1 = 1e300;
    for (std::size_t b = 1; b < C.branch_points.size(); ++b) d1 = std::min(d1, std::abs(C.branch_points[b] - e1));

    // first piece: t = e1 + (Q - e1) u^2, tracking q = v / u which is smooth at u = 0
    const cplx dir0 = (pts[1] - e1) / std::abs(pts[1] - e1);
    const double L = std::min(0.4 * d1, std::abs(pts[1] - e1));
    const cplx Q = e1 + L * dir0;
    cplx q_prev{0.0, 0.0};
    bool first = true;
    for (int k = 0; k < n; ++k) {
        const double u = 0.5 * (rule.nodes[k] + 1.0);
        const double w = 0.5 * rule.weights[k];
        const cplx t = e1 + (Q - e1) * u * u;
        cplx cand = std::sqrt(C.h(t)) / u;
        if (first) {
            if (std::abs(cand * u - C.v_sheet(t)) > std::abs(cand * u + C.v_sheet(t))) cand = -cand;
            first = false;
        } else if (std::abs(cand - q_prev) > std::abs(cand + q_prev)) {
            cand = -cand;
        }
        q_prev = cand;
        add(t, w * 2.0 * (Q - e1) / cand);
    }
    cplx v_prev = std::sqrt(C.h(Q));
    if (std::abs(v_prev - q_prev) > std::abs(v_prev + q_prev)) v_prev = -v_prev;

    // remaining polyline from Q, in steps no longer than half the clearance to branch points
    std::vector<cplx> rest{Q};
    if (std::abs(pts[1] - e1) > L) rest.push_back(pts[1]);
    for (std::size_t s = 2; s < pts.size(); ++s) rest.push_back(pts[s]);
    for (std::size_t s = 0; s + 1 < rest.size(); ++s) {
        cplx p = rest[s];
        const cplx end = rest[s + 1];
        for (int guard = 0; guard < 100000; ++guard) {
            const double remaining = std::abs(end - p);
            if (remaining <= 0.0) break;
            const double ell = std::min(remaining, 0.5 * branch_distance(C, p));
            const cplx q = (ell == remaining) ? end : p + ell * (end - p) / remaining;
            const cplx c = 0.5 * (p + q), r = 0.5 * (q - p);
            for (int k = 0; k < n; ++k) {
                const cplx t = c + r * rule.nodes[k];
                cplx v = std::sqrt(C.h(t));
                if (std::abs(v - v_prev) > std::abs(v + v_prev)) v = -v;
                v_prev = v;
                add(t, rule.weights[k] * r / v);
            }
            cplx vq = std::sqrt(C.h(q));
            if (std::abs(vq - v_prev) > std::abs(vq + v_prev)) vq = -vq;
            v_prev = vq;
            p = q;
            if (p == end) break;
        }
    }
    return {acc, v_prev};
}

} // namespace detail

// Integrals of (dt/v, ..., t^{g-1} dt/v) from the base Weierstrass point to (t, y) on E'.
inline CVec abel_integral(const DoubleCoverCurve& C, cplx t, cplx y, const AbelOptions& opt = {},
                          const std::vector<cplx>& via = {}) {
    if (t == C.branch_points[0]) return CVec::Zero(C.g);
    if (detail::branch_distance(C, t) < opt.clearance)
        throw Error(Errc::PathThroughBranchPoint, "end point lies on a branch point");
    const auto pts = detail::route(C, t, via, opt.clearance);
    int n = std::max(16, opt.quad_order / 4);
    auto [prev, vend] = detail::path_integral(C, pts, n);
    for (;;) {
        if (n > 1024) throw Error(Errc::QuadratureNoConvergence, "Abel quadrature did not settle");
        auto [next, v2] = detail::path_integral(C, pts, 2 * n);
        const double diff = (next - prev).cwiseAbs().maxCoeff();
        prev = next;
        vend = v2;
        n *= 2;
        if (diff < 1e-11 * std::max(1.0, max_abs(prev))) break;
    }
    // the path ended on the other sheet: the integral to (t, y) is its negative
    if (std::abs(vend - y) > std::abs(vend + y)) prev = -prev;
    return prev;
}

// Abel-Prym image of P = (x, y) on Gamma through its image (x^2, y) on E'.
inline CVec abel_prym(const DoubleCoverCurve& C, const PeriodResult& per, const CurvePoint& P,
                      const AbelOptions& opt = {}, const std::vector<cplx>& via = {}) {
    const CVec raw = abel_integral(C, P.x * P.x, P.y, opt, via);
    return 0.5 * per.a_periods.lu().solve(raw);
}

struct PrymData {
    PeriodMatrix Pi;
    CVec A, U, V, W;
    std::array<cplx, 3> marked_x{};
    cplx extra_x{};
    cplx base_point{};
};

inline CurvePoint point_on_sheet(const DoubleCoverCurve& C, cplx x) { return {x, C.v_sheet(x * x)}; }

inline void check_prym_vectors(const PrymData& d, double tol = 1e-6) {
    const std::array<std::pair<const char*, const CVec*>, 4> v{
        {{"A", &d.A}, {"U", &d.U}, {"V", &d.V}, {"W", &d.W}}};
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (lattice_distance(d.Pi, 2.0 * *v[i].second) <= tol)
            throw Error(Errc::DegenerateMarkedPoints, std::string(v[i].first) + " has order at most two");
        for (std::size_t j = i + 1; j < v.size(); ++j)
            if (lattice_distance(d.Pi, *v[i].second - *v[j].second) <= tol)
                throw Error(Errc::DegenerateMarkedPoints,
                            std::string(v[i].first) + " and " + v[j].first + " coincide mod the lattice");
    }
}

inline PrymData make_prym_data(const DoubleCoverCurve& C, const PeriodResult& per,
                               const std::array<cplx, 3>& marked_x, cplx extra_x,
                               const AbelOptions& opt = {}) {
    std::array<cplx, 4> xs{marked_x[0], marked_x[1], marked_x[2], extra_x};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (std::abs(xs[i]) < 1e-12)
            throw Error(Errc::DegenerateMarkedPoints, "marked x-value is zero");
        if (detail::branch_distance(C, xs[i] * xs[i]) < opt.clearance)
            throw Error(Errc::DegenerateMarkedPoints, "marked point sits on a branch point");
        for (std::size_t j = i + 1; j < xs.size(); ++j)
            if (std::abs(xs[i] - xs[j]) < 1e-12)
                throw Error(Errc::DegenerateMarkedPoints, "marked x-values coincide");
    }
    PrymData d;
    d.Pi = per.Pi;
    d.marked_x = marked_x;
    d.extra_x = extra_x;
    d.base_point = C.branch_points[0];
    d.U = -abel_prym(C, per, point_on_sheet(C, marked_x[0]), opt);
    d.V = -abel_prym(C, per, point_on_sheet(C, marked_x[1]), opt);
    d.W = -abel_prym(C, per, point_on_sheet(C, marked_x[2]), opt);
    d.A = abel_prym(C, per, point_on_sheet(C, extra_x), opt);
    check_prym_vectors(d);
    return d;
}

} // namespace prymlab
