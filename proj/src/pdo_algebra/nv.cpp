#include <prymlab/pdo.hpp>

#include <algorithm>

namespace prymlab {

namespace {

// [H, L] reduced to a one-variable descending series, known down to T1^{2 - s} when L is known
// down to T1^{1 - s}.
PseudoDiffOp reduced_commutator(const PseudoDiffOp& H, const PseudoDiffOp& L, const ComplexGrid& u) {
    const PseudoDiffOp c = op_commutator(H, L);
    return reduce_mod_H_one_variable(c, u, Expansion::Descending, *c.truncation);
}

double commutator_scale(const PseudoDiffOp& H, const PseudoDiffOp& L) {
    return std::max(op_max_abs(op_mul(H, L)), op_max_abs(op_mul(L, H)));
}

void add_relative(IdentityReport& rep, const ComplexGrid& g, double scale) {
    const Window& w = g.window();
    const CVec none;
    for (int n = w.n_lo; n <= w.n_hi; ++n)
        for (int m = w.m_lo; m <= w.m_hi; ++m) rep.add(n, m, ((n + m) % 2 + 2) % 2, none, std::abs(g(n, m)) / scale);
}

IdentityReport named(const char* id, double tol) {
    IdentityReport r;
    r.identity = id;
    r.tolerance = tol;
    return r;
}

} // namespace

LaxPair solve_lax_operator(const ComplexGrid& tau, cplx C, int s_max) {
    LaxPair lp;
    const AnsatzFields af = ansatz_fields(tau, C);
    lp.u = af.u;
    lp.v0 = af.v0;
    lp.H = schroedinger_operator(lp.u);

    PseudoDiffOp L = PseudoDiffOp::monomial(lp.v0, 1);
    L.truncation = 1;
    for (int s = 1; s <= s_max; ++s) {
        // with v_s = 0 the T1^{2-s} coefficient h0 is the inhomogeneous part of h_s, and
        // h_s = h0 + (t1 t2 v_s)(t1^{1-s} u) - u (t1 v_s). Solve for w = t1 v_s row by row in m.
        L.truncation = 1 - s;
        const ComplexGrid h0 = reduced_commutator(lp.H, L, lp.u).coeff(2 - s, 0);
        const Window hw = h0.window().intersect(lp.u.window()).intersect(lp.u.window().shifted(s - 1, 0));
        if (hw.empty() || hw.m_size() < 2) throw Error(Errc::WindowExhausted, "window too small to solve for the next coefficient");
        ComplexGrid w(Window{hw.n_lo, hw.n_hi, hw.m_lo, hw.m_hi + 1});
        for (int n = hw.n_lo; n <= hw.n_hi; ++n) {
            w.ref(n, hw.m_lo) = 1.0;
            for (int m = hw.m_lo; m <= hw.m_hi; ++m)
                w.ref(n, m + 1) = (lp.u(n, m) * w(n, m) - h0(n, m)) / lp.u(n + 1 - s, m);
        }
        L.window = L.window.intersect(w.window().shifted(1, 0));
        L.add_term(1 - s, 0, w.shifted(-1, 0));
        for (auto& [k, g] : L.terms) g = g.restricted(L.window);
    }
    lp.L = L;

    const PseudoDiffOp red = reduced_commutator(lp.H, L, lp.u);
    const double scale = commutator_scale(lp.H, L);
    for (int s = 0; s <= s_max; ++s) {
        const ComplexGrid hs = red.coeff(2 - s, 0);
        lp.h.push_back(hs);
        lp.h_residual.push_back(hs.max_abs() / scale);
    }
    lp.h_scale = scale;
    return lp;
}

NvReport nv_structure_check(const ComplexGrid& tau, const NvOptions& opt) {
    NvReport rep;
    const LaxPair lp = solve_lax_operator(tau, opt.C, opt.s_max);

    rep.h0 = named("h0", 1e-12);
    add_relative(rep.h0, lp.h[0], lp.h_scale);
    rep.h0.finish();
    rep.hs = named("hs", 1e-10);
    {
        Window w = lp.h[1].window();
        for (std::size_t s = 2; s < lp.h.size(); ++s) w = w.intersect(lp.h[s].window());
        ComplexGrid worst(w);
        for (std::size_t s = 1; s < lp.h.size(); ++s)
            for (int n = w.n_lo; n <= w.n_hi; ++n)
                for (int m = w.m_lo; m <= w.m_hi; ++m)
                    worst.ref(n, m) = std::max(std::abs(worst(n, m)), std::abs(lp.h[s](n, m)));
        add_relative(rep.hs, worst, lp.h_scale);
        rep.hs.finish();
    }

    // the wave function of L and H, and L read back from its wave operator
    const FormalKSeries ks = formal_wave_solution(lp.u, lp.L, opt.s_max);
    rep.wave_compatibility = ks.compatibility;
    const PseudoDiffOp phi = wave_operator(ks);
    const PseudoDiffOp shift = PseudoDiffOp::monomial(phi.window, 1);
    const PseudoDiffOp from_wave =
        truncated(op_mul(op_mul(phi, shift), wave_operator_inverse(phi)), 1 - opt.s_max);
    rep.wave_L_mismatch = op_max_diff(from_wave, lp.L) / op_max_abs(lp.L);
    {
        const ComplexGrid v = build_Lj(from_wave, 1).L.coeff(1, 0);
        rep.v_ratio_deviation = max_abs_diff(v / lp.v0, ComplexGrid(v.window().intersect(lp.v0.window()), 1.0));
    }

    // [L_j, H] in the normal form D1 + a T2 must be b (T1 - T2) up to the factor -u
    const LjResult lj = build_Lj(lp.L, opt.j);
    const PseudoDiffOp comm = op_commutator(lj.L, lp.H);
    const PseudoDiffOp red = reduce_mod_H(comm, lp.u, Expansion::Descending, 0);
    const double scale = op_max_abs(comm);
    const ComplexGrid beta = red.coeff(1, 0);
    ComplexGrid off = red.coeff(0, 1) + beta;
    off = ComplexGrid::generate(off.window(), [&](int n, int m) { return cplx(std::abs(off(n, m))); });
    for (const auto& [k, g] : red.terms) {
        if (k == std::pair{1, 0} || k == std::pair{0, 1}) continue;
        off = ComplexGrid::generate(off.window(), [&](int n, int m) { return cplx(std::max(off(n, m).real(), std::abs(g(n, m)))); });
    }
    rep.shape = named("nv_shape", opt.tolerance);
    add_relative(rep.shape, off, scale);
    rep.shape.finish();

    rep.b = -beta / lp.u;
    rep.F = f_tilde(lj.f);
    rep.f_tilde_routes = max_abs_diff(rep.F, f_tilde_residue(lj.calL_j));
    rep.flow = named("nv_flow", opt.tolerance);
    {
        const ComplexGrid t2F = rep.F.shifted(0, 1);
        const Window w = rep.b.window().intersect(t2F.window());
        for (int n = w.n_lo; n <= w.n_hi; ++n)
            for (int m = w.m_lo; m <= w.m_hi; ++m) {
                const cplx a = rep.b(n, m), b = t2F(n, m), c = rep.F(n, m);
                const double big = std::max({std::abs(a), std::abs(b), std::abs(c)});
                rep.flow.add(n, m, ((n + m) % 2 + 2) % 2, CVec(), std::abs(a - b + c) / big);
            }
        rep.flow.finish();
    }

    rep.potential_relation = named("nv_potential_relation", opt.tolerance);
    if (opt.j == 1) {
        const ComplexGrid lhs = lp.v0 * lp.u.shifted(-1, 0), rhs = lp.u * lp.v0.shifted(0, 1);
        const Window w = lhs.window().intersect(rhs.window());
        for (int n = w.n_lo; n <= w.n_hi; ++n)
            for (int m = w.m_lo; m <= w.m_hi; ++m)
                rep.potential_relation.add(n, m, ((n + m) % 2 + 2) % 2, CVec(), relative_residual({lhs(n, m), -rhs(n, m)}));
        rep.potential_relation.finish();
    } else {
        rep.potential_relation.note = "only defined for j = 1";
    }

    rep.pass = rep.h0.pass && rep.hs.pass && rep.shape.pass && rep.flow.pass && (opt.j != 1 || rep.potential_relation.pass);
    return rep;
}

} // namespace prymlab
