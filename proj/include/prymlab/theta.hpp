#pragma once

#include "errors.hpp"
#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace prymlab {

// Complex symmetric g x g matrix with positive definite imaginary part,
// together with the real data the summation kernel needs.
class PeriodMatrix {
public:
    int g() const { return static_cast<int>(B_.rows()); }
    const CMat& matrix() const { return B_; }
    const RMat& imag() const { return Y_; }
    const RMat& imag_inverse() const { return Yinv_; }
    // Upper triangular T with Im B = T^T T.
    const RMat& cholesky_upper() const { return T_; }
    // Length of the shortest nonzero vector of sqrt(pi) T Z^g.
    double shortest_vector() const { return rho_; }

    friend PeriodMatrix validate_period_matrix(const CMat& M);

private:
    CMat B_;
    RMat Y_, Yinv_, T_;
    double rho_ = 0.0;
};

struct ThetaPolicy {
    double target_abs_error = 1e-15;
    int max_radius = 40;
};

namespace detail {

// Visit every m in Z^g with ||T (m - center)||^2 <= r2, T upper triangular.
template <class F>
void enumerate_ellipsoid(const RMat& T, const RVec& center, double r2, F&& visit) {
    const int g = static_cast<int>(T.rows());
    IVec m(g);
    // partial[k]: sum of squares contributed by coordinates k..g-1
    std::vector<double> partial(g + 1, 0.0);
    auto rec = [&](auto&& self, int k) -> void {
        if (k < 0) {
            visit(static_cast<const IVec&>(m));
            return;
        }
        double s = 0.0;
        for (int j = k + 1; j < g; ++j) s += T(k, j) * (m[j] - center[j]);
        const double left = r2 - partial[k + 1];
        if (left < 0.0) return;
        const double half = std::sqrt(left) / T(k, k);
        const double mid = center[k] - s / T(k, k);
        const int lo = static_cast<int>(std::ceil(mid - half));
        const int hi = static_cast<int>(std::floor(mid + half));
        for (int x = lo; x <= hi; ++x) {
            m[k] = x;
            const double t = T(k, k) * (x - center[k]) + s;
            partial[k] = partial[k + 1] + t * t;
            self(self, k - 1);
        }
    };
    rec(rec, g - 1);
}

// Upper incomplete gamma Gamma(g/2, x) for positive integer g.
inline double upper_gamma_half_integer(int g, double x) {
    double a, val;
    if (g % 2 == 1) {
        a = 0.5;
        val = std::sqrt(pi) * std::erfc(std::sqrt(x));
    } else {
        a = 1.0;
        val = std::exp(-x);
    }
    while (a < 0.5 * g - 1e-12) {
        val = a * val + std::pow(x, a) * std::exp(-x);
        a += 1.0;
    }
    return val;
}

// Tail bound for the lattice points outside pi*||T(m - c)||^2 < R^2 (Deconinck et al.).
inline double tail_bound(int g, double rho, double R) {
    if (R <= 0.5 * rho) return std::numeric_limits<double>::infinity();
    const double x = (R - 0.5 * rho) * (R - 0.5 * rho);
    return 0.5 * g * std::pow(2.0 / rho, g) * upper_gamma_half_integer(g, x);
}

inline double truncation_radius(int g, double rho, double target) {
    double lo = 0.5 * rho, hi = 0.5 * rho + 2.0;
    while (tail_bound(g, rho, hi) > target) hi += 2.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (tail_bound(g, rho, mid) > target ? lo : hi) = mid;
    }
    return hi;
}

inline cplx pairwise_sum(std::vector<cplx>& v) {
    if (v.empty()) return {0.0, 0.0};
    std::size_t n = v.size();
    while (n > 1) {
        std::size_t h = (n + 1) / 2;
        for (std::size_t i = 0; i + h < n; ++i) v[i] += v[i + h];
        n = h;
    }
    return v[0];
}

struct ThetaSum {
    cplx value;
    CVec grad; // partial derivatives d/dz_k, empty unless requested
    cplx log_factor; // value = exp(log_factor) * reduced, finite even where value overflows
    cplx reduced;
    CVec log_grad; // grad / value without forming either
};

// Sum over n in Z^g + a of exp(2 pi i (n, z) + pi i (B n, n)), after reducing z
// by the lattice so that |Y^{-1} Im z| <= 1/2 componentwise.
inline ThetaSum theta_kernel(const PeriodMatrix& P, const CVec& z, const RVec& a,
                             const ThetaPolicy& pol, bool want_grad, double radius_pad = 0.0) {
    const int g = P.g();
    const CMat& B = P.matrix();
    const RMat& Yinv = P.imag_inverse();

    RVec y = z.imag();
    RVec cz = Yinv * y;
    IVec q(g);
    for (int k = 0; k < g; ++k) q[k] = static_cast<int>(std::lround(cz[k]));
    CVec zr = z - B * to_cvec(q);
    IVec p(g);
    for (int k = 0; k < g; ++k) p[k] = static_cast<int>(std::lround(zr[k].real()));
    zr -= to_cvec(p);

    const CVec qc = to_cvec(q);
    // theta(z) = exp(2 pi i (a,p)) mu(zr, q) S(zr)
    const cplx log_factor =
        2.0 * pi * I * cplx(a.dot(p.cast<double>())) - pi * I * bdot(B * qc, qc) - 2.0 * pi * I * bdot(qc, zr);
    const cplx factor = std::exp(log_factor);

    const RVec c = Yinv * zr.imag();
    const RVec center = -(c + a);
    const double R = truncation_radius(g, P.shortest_vector(), pol.target_abs_error) + radius_pad;
    const double r2 = R * R / pi;

    for (int k = 0; k < g; ++k) {
        const double reach = std::sqrt(r2 * Yinv(k, k));
        if (std::ceil(reach) + 1 > pol.max_radius)
            throw Error(Errc::RadiusCapExceeded, "required enumeration radius " +
                                                     std::to_string(reach) + " exceeds cap " +
                                                     std::to_string(pol.max_radius));
    }

    std::vector<IVec> pts;
    enumerate_ellipsoid(P.cholesky_upper(), center, r2, [&](const IVec& m) { pts.push_back(m); });
    std::sort(pts.begin(), pts.end(), [](const IVec& u, const IVec& v) {
        const int nu = u.squaredNorm(), nv = v.squaredNorm();
        if (nu != nv) return nu < nv;
        return std::lexicographical_compare(u.data(), u.data() + u.size(), v.data(),
                                            v.data() + v.size());
    });

    std::vector<cplx> terms;
    terms.reserve(pts.size());
    std::vector<std::vector<cplx>> gterms(want_grad ? g : 0);
    for (auto& gt : gterms) gt.reserve(pts.size());
    for (const IVec& m : pts) {
        CVec n = to_cvec(m) + a.cast<cplx>();
        const cplx e = std::exp(2.0 * pi * I * bdot(n, zr) + pi * I * bdot(B * n, n));
        terms.push_back(e);
        for (int k = 0; k < static_cast<int>(gterms.size()); ++k)
            gterms[k].push_back(2.0 * pi * I * n[k] * e);
    }
    ThetaSum out;
    const cplx S = pairwise_sum(terms);
    out.value = factor * S;
    out.log_factor = log_factor;
    out.reduced = S;
    if (want_grad) {
        out.grad.resize(g);
        out.log_grad.resize(g);
        for (int k = 0; k < g; ++k) {
            const cplx d = pairwise_sum(gterms[k]) - 2.0 * pi * I * qc[k] * S;
            out.grad[k] = factor * d;
            out.log_grad[k] = d / S;
        }
    }
    return out;
}

} // namespace detail

inline PeriodMatrix validate_period_matrix(const CMat& M) {
    if (M.rows() != M.cols() || M.rows() == 0)
        throw Error(Errc::NotSymmetric, "matrix is not square");
    const int g = static_cast<int>(M.rows());
    for (int i = 0; i < g; ++i)
        for (int j = i + 1; j < g; ++j)
            if (M(i, j) != M(j, i))
                throw Error(Errc::NotSymmetric, "entry (" + std::to_string(i) + "," +
                                                    std::to_string(j) + ") differs from its transpose");
    PeriodMatrix P;
    P.B_ = M;
    P.Y_ = M.imag();
    Eigen::LLT<RMat> llt(P.Y_);
    if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().array() > 0).all())
        throw Error(Errc::NotPositiveDefinite, "Cholesky factorization of Im B failed");
    P.T_ = llt.matrixU();
    P.Yinv_ = llt.solve(RMat::Identity(g, g));
    // shortest vector: search the ball bounded by the shortest basis column
    double best = P.T_.col(0).norm();
    for (int k = 1; k < g; ++k) best = std::min(best, P.T_.col(k).norm());
    const double r2 = best * best * (1.0 + 1e-12);
    detail::enumerate_ellipsoid(P.T_, RVec::Zero(g), r2, [&](const IVec& m) {
        if (m.squaredNorm() == 0) return;
        best = std::min(best, (P.T_ * m.cast<double>()).norm());
    });
    P.rho_ = std::sqrt(pi) * best;
    return P;
}

inline cplx theta(const PeriodMatrix& B, const CVec& z, const ThetaPolicy& pol = {}) {
    return detail::theta_kernel(B, z, RVec::Zero(B.g()), pol, false).value;
}

// Principal-branch-free logarithm: exact lattice factor plus the log of the reduced sum.
inline cplx log_theta(const PeriodMatrix& B, const CVec& z, const ThetaPolicy& pol = {}) {
    const auto s = detail::theta_kernel(B, z, RVec::Zero(B.g()), pol, false);
    return s.log_factor + std::log(s.reduced);
}

// mu with theta(z + p + B q) = mu * theta(z).
inline cplx theta_quasi_factor(const PeriodMatrix& B, const CVec& z, const IVec& q) {
    const CVec qc = to_cvec(q);
    return std::exp(-pi * I * bdot(B.matrix() * qc, qc) - 2.0 * pi * I * bdot(z, qc));
}

inline cplx theta_directional_derivative(const PeriodMatrix& B, const CVec& z, const CVec& dir,
                                         const ThetaPolicy& pol = {}) {
    auto s = detail::theta_kernel(B, z, RVec::Zero(B.g()), pol, true, 1.0);
    return bdot(s.grad, dir);
}

// Value and full gradient in one pass.
inline detail::ThetaSum theta_with_gradient(const PeriodMatrix& B, const CVec& z,
                                            const ThetaPolicy& pol = {}) {
    return detail::theta_kernel(B, z, RVec::Zero(B.g()), pol, true, 1.0);
}

// eps_k of the index in lexicographic order (first coordinate most significant).
inline RVec half_char(int g, int index) {
    RVec e(g);
    for (int k = 0; k < g; ++k) e[k] = (index >> (g - 1 - k)) & 1;
    return e;
}

// Sum over m of exp(2 pi i (2m+eps, z) + pi i (2m+eps, B(m+eps/2))), i.e. the shifted
// lattice Z^g + eps/2 summed against the doubled matrix.
inline cplx theta_second_order(const PeriodMatrix& B2, const CVec& z, const RVec& eps,
                               const ThetaPolicy& pol = {}) {
    return detail::theta_kernel(B2, 2.0 * z, 0.5 * eps, pol, false).value;
}

// Same quantity through the plain theta of 2B at 2z + B eps.
inline cplx theta_second_order_via_theta(const PeriodMatrix& B, const PeriodMatrix& B2,
                                         const CVec& z, const RVec& eps,
                                         const ThetaPolicy& pol = {}) {
    const CVec e = eps.cast<cplx>();
    const cplx pre = std::exp(0.5 * pi * I * bdot(B.matrix() * e, e) + 2.0 * pi * I * bdot(e, z));
    return pre * theta(B2, 2.0 * z + B.matrix() * e, pol);
}

inline PeriodMatrix doubled(const PeriodMatrix& B) { return validate_period_matrix(2.0 * B.matrix()); }

struct KummerPoint {
    CVec components;
};

inline KummerPoint kummer(const PeriodMatrix& B2, const CVec& z, const ThetaPolicy& pol = {}) {
    const int g = B2.g();
    KummerPoint k{CVec(1 << g)};
    for (int i = 0; i < (1 << g); ++i) k.components[i] = theta_second_order(B2, z, half_char(g, i), pol);
    if (max_abs(k.components) < 1e-300) throw Error(Errc::ZeroVector, "Kummer image vanishes");
    return k;
}

// Largest 2x2 minor of the pair, scaled to unit vectors; zero iff projectively equal.
inline double projective_distance(const CVec& a, const CVec& b) {
    const double na = a.norm(), nb = b.norm();
    double d = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = i + 1; j < a.size(); ++j)
            d = std::max(d, std::abs(a[i] * b[j] - a[j] * b[i]));
    return d / (na * nb);
}

struct DivisorPoint {
    CVec z;
    cplx t;
    double residual = 0.0;
    double scale = 0.0;
};

struct ZeroSearch {
    double seed_radius = 0.5;
    int seeds = 16;
    int max_iters = 60;
    double rel_tol = 1e-12;
};

// Newton iteration for t -> theta(z0 + t dir) from a single seed.
inline std::optional<DivisorPoint> refine_theta_zero(const PeriodMatrix& B, const CVec& z0,
                                                     const CVec& dir, cplx t, double tol,
                                                     double scale, const ThetaPolicy& pol = {},
                                                     int max_iters = 60) {
    const double cap = 1.0 / std::max(1e-300, dir.norm());
    for (int it = 0; it < max_iters; ++it) {
        auto s = theta_with_gradient(B, z0 + t * dir, pol);
        const cplx d = bdot(s.grad, dir);
        const double r = std::abs(s.value);
        if (r < tol) {
            // one polishing step, kept only if it helps
            if (std::abs(d) > 0.0) {
                const cplx t2 = t - s.value / d;
                if (std::abs(theta(B, z0 + t2 * dir, pol)) < r) t = t2;
            }
            const CVec zf = z0 + t * dir;
            return DivisorPoint{zf, t, std::abs(theta(B, zf, pol)), scale};
        }
        if (!(std::abs(d) > 0.0) || !std::isfinite(std::abs(d))) break;
        cplx step = s.value / d;
        if (std::abs(step) > cap) step *= cap / std::abs(step);
        t -= step;
        if (!std::isfinite(std::abs(t))) break;
    }
    return std::nullopt;
}

inline DivisorPoint find_theta_zero(const PeriodMatrix& B, const CVec& z0, const CVec& dir,
                                    const ThetaPolicy& pol = {}, const ZeroSearch& opt = {}) {
    std::vector<cplx> seeds;
    double scale = 0.0;
    for (int k = 0; k < opt.seeds; ++k) {
        const cplx t = opt.seed_radius * std::exp(2.0 * pi * I * double(k) / double(opt.seeds));
        seeds.push_back(t);
        scale = std::max(scale, std::abs(theta(B, z0 + t * dir, pol)));
    }
    if (!(scale > 1e-300))
        throw Error(Errc::NoConvergence, "theta vanishes identically along the line");
    for (cplx t : seeds)
        if (auto r = refine_theta_zero(B, z0, dir, t, opt.rel_tol * scale, scale, pol, opt.max_iters))
            return *r;
    throw Error(Errc::NoConvergence, "Newton failed from all seeds");
}

} // namespace prymlab
