#include <prymlab/identity.hpp>

#include <algorithm>

// Genus-1 instance of the general four-point equation: the Jacobian is C / <1, tau>, the Abel map
// is the identity, and the third-kind integrals are logarithms of ratios of the odd theta.

namespace prymlab {

namespace {

struct Elliptic {
    PeriodMatrix P;
    ThetaPolicy pol;
    cplx d1; // derivative of the odd theta at 0

    Elliptic(cplx tau, const ThetaPolicy& p) : P(validate_period_matrix(CMat::Constant(1, 1, tau))), pol(p) {
        d1 = detail::theta_kernel(P, cvec({0.5}), RVec::Constant(1, 0.5), pol, true, 1.0).grad[0];
    }
    cplx th(cplx z) const { return theta(P, cvec({z}), pol); }
    cplx odd(cplx z) const { return detail::theta_kernel(P, cvec({z + 0.5}), RVec::Constant(1, 0.5), pol, false).value; }
    double dist(cplx a, cplx b) const { return lattice_distance(P, cvec({a - b})); }
};

struct Setup {
    Elliptic E;
    cplx U, V, Z;
    // exp of the expansion constants: [0] at the + point, [1] at the - point
    cplx ea1[2], ea2[2], eb1[2], eb2[2];
    cplx q1[2], q2[2];
};

Setup make_setup(const FourPointConfig& cfg, const ThetaPolicy& pol) {
    Setup s{Elliptic(cfg.tau, pol), 0.0, 0.0, 0.0, {}, {}, {}, {}, {cfg.q1_plus, cfg.q1_minus},
            {cfg.q2_plus, cfg.q2_minus}};
    const std::array<std::pair<const char*, cplx>, 5> pts{
        {{"q1+", cfg.q1_plus}, {"q1-", cfg.q1_minus}, {"q2+", cfg.q2_plus}, {"q2-", cfg.q2_minus}, {"gamma", cfg.gamma}}};
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (s.E.dist(pts[i].second, pts[j].second) < 1e-8)
                throw Error(Errc::DegenerateConfiguration,
                            std::string(pts[i].first) + " and " + pts[j].first + " coincide mod the lattice");
    const Elliptic& E = s.E;
    s.U = cfg.q1_minus - cfg.q1_plus;
    s.V = cfg.q2_minus - cfg.q2_plus;
    // theta vanishes at the half period (1 + tau) / 2, so Z puts the pole of psi at gamma
    s.Z = 0.5 * (1.0 + cfg.tau) - cfg.gamma;
    const cplx *q1 = s.q1, *q2 = s.q2;
    s.ea1[0] = E.odd(q1[0] - q1[1]) / E.d1;
    s.ea1[1] = E.d1 / E.odd(q1[1] - q1[0]);
    s.eb2[0] = E.odd(q2[0] - q2[1]) / E.d1;
    s.eb2[1] = E.d1 / E.odd(q2[1] - q2[0]);
    for (int i = 0; i < 2; ++i) {
        s.ea2[i] = E.odd(q1[i] - q2[1]) / E.odd(q1[i] - q2[0]);
        s.eb1[i] = E.odd(q2[i] - q1[1]) / E.odd(q2[i] - q1[0]);
    }
    return s;
}

// Leading coefficient of psi_{n,m} at q1 (xi) or q2 (chi), side 0 = plus, 1 = minus.
cplx xi0(const Setup& s, int side, int n, int m) {
    const cplx q = s.q1[side];
    return s.E.th(q + double(n) * s.U + double(m) * s.V + s.Z) / s.E.th(q + s.Z) * ipow(s.ea1[side], n) *
           ipow(s.ea2[side], m);
}

cplx chi0(const Setup& s, int side, int n, int m) {
    const cplx q = s.q2[side];
    return s.E.th(q + double(n) * s.U + double(m) * s.V + s.Z) / s.E.th(q + s.Z) * ipow(s.eb1[side], n) *
           ipow(s.eb2[side], m);
}

cplx psi(const Setup& s, int n, int m, cplx z) {
    const Elliptic& E = s.E;
    const cplx den = E.th(z + s.Z);
    if (!(std::abs(den) > 1e-12)) throw Error(Errc::NearDivisor, "point sits on the pole of psi");
    return E.th(z + double(n) * s.U + double(m) * s.V + s.Z) / den *
           ipow(E.odd(z - s.q1[1]) / E.odd(z - s.q1[0]), n) * ipow(E.odd(z - s.q2[1]) / E.odd(z - s.q2[0]), m);
}

FourPointCoefficients coefficients(const Setup& s, int n, int m) {
    FourPointCoefficients c;
    c.a = xi0(s, 0, n + 1, m + 1) / xi0(s, 0, n + 1, m);
    c.b = chi0(s, 0, n + 1, m + 1) / chi0(s, 0, n, m + 1);
    c.c = c.b * xi0(s, 1, n, m + 1) / xi0(s, 1, n, m);
    c.c_alt = c.a * chi0(s, 1, n + 1, m) / chi0(s, 1, n, m);
    return c;
}

} // namespace

FourPointCoefficients four_point_coefficients(const FourPointConfig& cfg, int n, int m, const ThetaPolicy& pol) {
    return coefficients(make_setup(cfg, pol), n, m);
}

cplx four_point_psi(const FourPointConfig& cfg, int n, int m, cplx z, const ThetaPolicy& pol) {
    return psi(make_setup(cfg, pol), n, m, z);
}

IdentityReport verify_general_four_point_genus1(const FourPointConfig& cfg, const IndexWindow& w,
                                                const std::vector<cplx>& points, double tolerance,
                                                double* coefficient_agreement) {
    const Setup s = make_setup(cfg, {});
    IdentityReport rep;
    rep.identity = "four_point_genus1";
    rep.tolerance = tolerance;
    double agree = 0.0;
    for (int n = w.n_lo; n <= w.n_hi; ++n)
        for (int m = w.m_lo; m <= w.m_hi; ++m) {
            const auto c = coefficients(s, n, m);
            // the second printed form of c, factor by factor
            const cplx c2 = xi0(s, 1, n, m + 1) * chi0(s, 0, n + 1, m + 1) / (xi0(s, 1, n, m) * chi0(s, 0, n, m + 1));
            agree = std::max({agree, std::abs(c.c - c2) / std::abs(c.c), std::abs(c.c - c.c_alt) / std::abs(c.c)});
            for (cplx z : points) {
                const double r = relative_residual({psi(s, n + 1, m + 1, z), -c.a * psi(s, n + 1, m, z),
                                                    -c.b * psi(s, n, m + 1, z), c.c * psi(s, n, m, z)});
                rep.add(n, m, 0, cvec({z}), r);
            }
        }
    if (coefficient_agreement) *coefficient_agreement = agree;
    return rep.finish();
}

} // namespace prymlab
