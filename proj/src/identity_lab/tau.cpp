#include <prymlab/identity.hpp>

#include <algorithm>

namespace prymlab {

namespace {

int flip(int nu) { return (nu + 1) & 1; }

} // namespace

TauModel prym_tau_model(const PrymFrame& f, const SchroedingerConstants& k) {
    // any l with (l, V) = 1 works; this one is the smallest
    const CVec l = f.V.conjugate() / f.V.squaredNorm();
    const cplx L1 = std::log(k.c1), L2 = std::log(k.c2), Lw1 = std::log(k.w1), Lw2 = std::log(k.w2),
               Lw3 = std::log(k.w3);
    TauModel t;
    t.V = f.V;
    t.C = k.c3;
    t.tau = [f, l, L1, L2](int n, int nu, const CVec& z) {
        const cplx lz = bdot(l, z);
        return f.th(double(n) * f.U + double(1 - nu) * f.W + z) * std::exp((nu - 0.5) * (lz * L1 + double(n) * L2));
    };
    t.alpha = [f, l, L1, L2, Lw1, Lw2, Lw3](int n, int nu, const CVec& z) {
        const cplx lz = bdot(l, z);
        return f.th(f.A + double(n) * f.U + double(nu) * f.W + z) *
               std::exp(double(n) * Lw1 + lz * Lw2 + double(nu) * Lw3 + (0.5 - nu) * (lz * L1 + double(n) * L2));
    };
    return t;
}

TauModel exponential_tau_model(cplx a, const CVec& b, const CVec& V) {
    TauModel t;
    t.V = V;
    t.C = 1.0;
    t.tau = [a, b](int n, int, const CVec& z) { return std::exp(a * double(n) + bdot(b, z)); };
    return t;
}

CVec tau_divisor_point(const PrymFrame& f, const CVec& theta_zero, int n, int nu) {
    return theta_zero - double(n) * f.U - double(1 - nu) * f.W;
}

double tau_equation_residual(const TauModel& t, int n, int nu, const CVec& z) {
    const auto& T = t.tau;
    const CVec &V = t.V;
    const int mu = flip(nu);
    const cplx C2 = t.C * t.C;
    return relative_residual({T(n + 1, mu, z) * T(n, mu, z + V) * T(n - 1, nu, z - V),
                              T(n + 1, nu, z + V) * T(n, mu, z - V) * T(n - 1, mu, z),
                              -C2 * T(n + 1, mu, z) * T(n, mu, z - V) * T(n - 1, nu, z + V),
                              -C2 * T(n + 1, nu, z - V) * T(n, mu, z + V) * T(n - 1, mu, z)});
}

ResidueCheck residue_relations(const TauModel& t, int n, int nu, const CVec& z) {
    if (!t.alpha) throw Error(Errc::DegenerateConfiguration, "residue relations need the numerators alpha");
    const auto& T = t.tau;
    const CVec &V = t.V;
    const int mu = flip(nu);
    const cplx C = t.C;
    auto psi = [&](int k, int e, const CVec& x) { return t.alpha(k, e, x) / T(k, e, x); };
    const cplx a = t.alpha(n, nu, z);

    const cplx p_up = psi(n + 1, mu, z), p_dn = psi(n - 1, mu, z);
    const cplx p_plus = psi(n, mu, z + V), p_minus = psi(n, mu, z - V);
    const cplx t_up = T(n + 1, mu, z), t_dn = T(n - 1, mu, z);
    const cplx t_plus = T(n, mu, z + V), t_minus = T(n, mu, z - V);

    const cplx rhs1 = -a * T(n + 1, nu, z + V) / (t_up * t_plus) / C;
    const cplx rhs2 = a * T(n - 1, nu, z - V) / (t_minus * t_dn) / C;
    const cplx rhs3 = -a * T(n + 1, nu, z - V) / (t_up * t_minus) * C;
    const cplx rhs4 = a * T(n - 1, nu, z + V) / (t_plus * t_dn) * C;

    ResidueCheck out;
    out.r[0] = relative_residual({p_up, -p_plus, -rhs1});
    out.r[1] = relative_residual({p_minus, -p_dn, -rhs2});
    out.r[2] = relative_residual({p_up, -p_minus, -rhs3});
    out.r[3] = relative_residual({p_plus, -p_dn, -rhs4});
    out.tau_equation = tau_equation_residual(t, n, nu, z);

    // (rhs1 - rhs2) - (rhs3 - rhs4), cleared of denominators, is the tau equation's L - R
    const cplx scale = -C * t_up * t_plus * t_minus * t_dn / a;
    const cplx C2 = C * C;
    const cplx l1 = t_up * t_plus * T(n - 1, nu, z - V), l2 = T(n + 1, nu, z + V) * t_minus * t_dn;
    const cplx r1 = C2 * t_up * t_minus * T(n - 1, nu, z + V), r2 = C2 * T(n + 1, nu, z - V) * t_plus * t_dn;
    const cplx combined = ((rhs1 - rhs2) - (rhs3 - rhs4)) * scale;
    const double big = std::max({std::abs(l1), std::abs(l2), std::abs(r1), std::abs(r2)});
    out.skeleton = std::abs(combined - (l1 + l2 - r1 - r2)) / big;
    return out;
}

IdentityReport verify_tau_residues(const PrymFrame& f, const TauModel& t, const std::vector<DivisorPoint>& pts,
                                   double tolerance) {
    IdentityReport rep;
    rep.identity = "tau_residues";
    rep.tolerance = tolerance;
    for (const auto& p : pts)
        for (int n = 0; n < 2; ++n)
            for (int nu = 0; nu < 2; ++nu) {
                const CVec z = tau_divisor_point(f, p.z, n, nu);
                double r = tau_equation_residual(t, n, nu, z);
                if (t.alpha) {
                    const auto rc = residue_relations(t, n, nu, z);
                    r = std::max({r, rc.r[0], rc.r[1], rc.r[2], rc.r[3], rc.skeleton});
                }
                rep.add(n, 0, nu, z, r);
            }
    return rep.finish();
}

double recursion_mismatch(const TauModel& t, int n, int nu, const CVec& z) {
    const auto& T = t.tau;
    const CVec &V = t.V;
    const int mu = flip(nu);
    const cplx C2 = t.C * t.C;
    // level s = 0: tau_{n,0}^nu = tau_{n-1}^nu. The second expression comes from the equation for
    // nu + 1 at z - V, where C^2 multiplies the other product.
    const cplx a1 = T(n - 1, mu, z) * T(n + 1, nu, z + V), b1 = C2 * T(n - 1, nu, z + V) * T(n + 1, mu, z);
    const cplx a2 = C2 * T(n - 1, mu, z) * T(n + 1, nu, z - V), b2 = T(n - 1, nu, z - V) * T(n + 1, mu, z);
    const cplx d1 = T(n, mu, z + V), d2 = T(n, mu, z - V);
    const cplx e1 = (a1 - b1) / d1, e2 = (a2 - b2) / d2;
    const double big = std::max({std::abs(a1 / d1), std::abs(b1 / d1), std::abs(a2 / d2), std::abs(b2 / d2)});
    return std::abs(e1 - e2) / big;
}

IdentityReport verify_recursion_consistency(const PrymFrame& f, const TauModel& t, const std::vector<DivisorPoint>& pts,
                                            double tolerance) {
    IdentityReport rep;
    rep.identity = "recursion";
    rep.tolerance = tolerance;
    for (const auto& p : pts)
        for (int n = 0; n < 2; ++n)
            for (int nu = 0; nu < 2; ++nu) {
                const CVec z = tau_divisor_point(f, p.z, n, nu);
                rep.add(n, 0, nu, z, recursion_mismatch(t, n, nu, z));
            }
    return rep.finish();
}

} // namespace prymlab
