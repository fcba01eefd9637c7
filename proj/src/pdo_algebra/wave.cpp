#include <prymlab/pdo.hpp>

#include <algorithm>
#include <string>

namespace prymlab {

namespace {

PseudoDiffOp shift_difference(const Window& w, Expansion dir) {
    // T1 - T1^{-1}
    PseudoDiffOp d = PseudoDiffOp::monomial(w, 1, 0, 1.0);
    d.add_term(-1, 0, ComplexGrid(w, -1.0));
    d.expansion = dir;
    return d;
}

} // namespace

AnsatzFields ansatz_fields(const ComplexGrid& tau, cplx C) {
    const Window& w = tau.window();
    AnsatzFields f;
    f.u = ComplexGrid::generate({w.n_lo, w.n_hi - 1, w.m_lo, w.m_hi - 1}, [&](int n, int m) {
        return C * tau(n + 1, m) * tau(n, m + 1) / (tau(n + 1, m + 1) * tau(n, m));
    });
    f.v0 = ComplexGrid::generate({w.n_lo + 1, w.n_hi - 1, w.m_lo, w.m_hi}, [&](int n, int m) {
        const cplx t = tau(n, m);
        return tau(n + 1, m) * tau(n - 1, m) / (t * t);
    });
    return f;
}

FormalKSeries formal_wave_solution(const ComplexGrid& u, const PseudoDiffOp& calL, int s_max, double tolerance) {
    if (!calL.one_variable() || calL.expansion != Expansion::Descending)
        throw std::invalid_argument("the eigenvalue operator must be a descending one-variable series");
    std::vector<ComplexGrid> v;
    for (int r = 0; r <= s_max; ++r) v.push_back(calL.coeff(1 - r, 0));

    const Window W = u.window().intersect(calL.window);
    const int n0 = W.n_lo, m0 = W.m_lo, N = W.n_hi, M = W.m_hi;
    // xi_q has full columns from n0 + 1 + q: each order needs the previous one a column to the left
    if (N - (n0 + 1 + s_max) < 1 || M - m0 < 1) throw Error(Errc::WindowExhausted, "window too small for the requested order");

    FormalKSeries ks;
    double worst = 0.0;
    for (int q = 0; q <= s_max; ++q) {
        // bottom row from L psi = k psi at order q, starting at the window corner of xi_q
        const int start = n0 + 1 + q;
        std::vector<cplx> row(std::size_t(N - n0 + 1), cplx{});
        row[std::size_t(start - n0)] = 1.0;
        for (int n = start; n < N; ++n) {
            cplx rhs = row[std::size_t(n - n0)];
            for (int r = 1; r <= q; ++r) rhs -= v[r](n, m0) * ks.xi[std::size_t(q - r)](n + 1 - r, m0);
            row[std::size_t(n + 1 - n0)] = rhs / v[0](n, m0);
        }
        // columns from H psi = 0:
        // xi_q(n+1, m+1) = u xi_q(n+1, m) + xi_{q-1}(n, m) - u xi_{q-1}(n, m+1)
        const Window wq{n0 + 1 + q, N, m0, M};
        ComplexGrid xi(wq);
        for (int n = wq.n_lo; n <= N; ++n) {
            xi.ref(n, m0) = row[std::size_t(n - n0)];
            for (int m = m0; m < M; ++m) {
                cplx val = u(n - 1, m) * xi(n, m);
                if (q > 0) {
                    const ComplexGrid& prev = ks.xi[std::size_t(q - 1)];
                    val += prev(n - 1, m) - u(n - 1, m) * prev(n - 1, m + 1);
                }
                xi.ref(n, m + 1) = val;
            }
        }
        ks.xi.push_back(std::move(xi));

        // the L relation on the remaining rows is not used above: it is the compatibility check
        const ComplexGrid& cur = ks.xi.back();
        for (int m = m0 + 1; m <= M; ++m)
            for (int n = wq.n_lo; n < N; ++n) {
                bool inside = true;
                for (int r = 1; r <= q && inside; ++r) inside = ks.xi[std::size_t(q - r)].window().contains(n + 1 - r, m);
                if (!inside) continue;
                cplx sum = v[0](n, m) * cur(n + 1, m) - cur(n, m);
                double big = std::max(std::abs(v[0](n, m) * cur(n + 1, m)), std::abs(cur(n, m)));
                for (int r = 1; r <= q; ++r) {
                    const cplx t = v[r](n, m) * ks.xi[std::size_t(q - r)](n + 1 - r, m);
                    sum += t;
                    big = std::max(big, std::abs(t));
                }
                worst = std::max(worst, std::abs(sum) / big);
            }
    }
    ks.compatibility = worst;
    if (!(worst <= tolerance))
        throw Error(Errc::CompatibilityFailure,
                    "propagation routes disagree by " + std::to_string(worst) + " relative to the terms");
    return ks;
}

PseudoDiffOp wave_operator(const FormalKSeries& ks) {
    PseudoDiffOp phi;
    phi.window = ks.xi.back().window();
    for (const auto& x : ks.xi) phi.window = phi.window.intersect(x.window());
    phi.expansion = Expansion::Descending;
    phi.truncation = -int(ks.xi.size()) + 1;
    for (std::size_t s = 0; s < ks.xi.size(); ++s) phi.add_term(-int(s), 0, ks.xi[s]);
    return phi;
}

PseudoDiffOp wave_operator_inverse(const PseudoDiffOp& phi) {
    return op_inverse(phi, Expansion::Descending, *phi.truncation);
}

double eigen_residual(const PseudoDiffOp& calL, const FormalKSeries& ks) {
    const int s_max = int(ks.xi.size()) - 1;
    double worst = 0.0;
    for (int q = 0; q <= s_max; ++q) {
        const Window wq = ks.xi[std::size_t(q)].window().intersect(calL.window);
        for (int n = wq.n_lo; n <= wq.n_hi; ++n)
            for (int m = wq.m_lo; m <= wq.m_hi; ++m) {
                cplx sum = -ks.xi[std::size_t(q)](n, m);
                double big = std::abs(sum);
                bool inside = true;
                for (int r = 0; r <= q && inside; ++r) {
                    const ComplexGrid& x = ks.xi[std::size_t(q - r)];
                    if (!x.window().contains(n + 1 - r, m)) {
                        inside = false;
                        break;
                    }
                    const cplx t = calL.coeff(1 - r, 0)(n, m) * x(n + 1 - r, m);
                    sum += t;
                    big = std::max(big, std::abs(t));
                }
                if (inside && big > 0.0) worst = std::max(worst, std::abs(sum) / big);
            }
    }
    return worst;
}

std::map<int, ComplexGrid> t1_decomposition(const PseudoDiffOp& calL_j, int j) {
    if (!calL_j.one_variable() || calL_j.expansion != Expansion::Descending || !calL_j.truncation)
        throw std::invalid_argument("decomposition expects a descending one-variable series");
    if (calL_j.max_t1() > j) throw std::invalid_argument("series has terms above the requested power");
    // L^j = sum f_i (T^{i+1} - T^{i-1}), so f_{e-1} = g_e + f_{e+1}
    std::map<int, ComplexGrid> f;
    const ComplexGrid zero(calL_j.window);
    for (int i = j - 1; i + 1 >= *calL_j.truncation; --i) {
        const auto up = f.find(i + 2);
        f.emplace(i, calL_j.coeff(i + 1, 0) + (up == f.end() ? zero : up->second));
    }
    return f;
}

LjResult build_Lj(const PseudoDiffOp& calL, int j) {
    if (j < 1) throw std::invalid_argument("L_j needs j >= 1");
    LjResult r;
    r.calL_j = calL;
    for (int k = 1; k < j; ++k) r.calL_j = op_mul(r.calL_j, calL);
    if (!r.calL_j.known(0))
        throw Error(Errc::TruncationTooShallow, "power of the eigenvalue operator not represented down to T1^0");
    r.f = t1_decomposition(r.calL_j, j);

    const Window w = r.calL_j.window;
    PseudoDiffOp inner = PseudoDiffOp::monomial(r.f.at(0), 0);
    for (int i = 1; i < j; ++i) {
        inner.add_term(i, 0, r.f.at(i));
        // T^{-i} f = (t^{-i} f) T^{-i}
        inner = op_add(inner, PseudoDiffOp::monomial(r.f.at(i).shifted(-i, 0), -i));
    }
    r.L = op_mul(inner, shift_difference(w, Expansion::Descending));
    r.positive_mismatch = op_max_diff(positive_part(r.L), positive_part(r.calL_j));
    return r;
}

PseudoDiffOp dual_operator(const PseudoDiffOp& calL, int limit) {
    const PseudoDiffOp star = op_adjoint(calL);
    const PseudoDiffOp diff = shift_difference(star.window, Expansion::Ascending);
    const PseudoDiffOp inv = op_inverse(diff, Expansion::Ascending, limit + 2);
    return truncated(op_mul(op_mul(inv, star), diff), limit);
}

ComplexGrid f_tilde(const std::map<int, ComplexGrid>& f) {
    const ComplexGrid& fm = f.at(-1);
    const auto up = f.find(1);
    const ComplexGrid fp = up == f.end() ? ComplexGrid(fm.window()) : up->second;
    return fp - fm.shifted(1, 0);
}

ComplexGrid f_tilde_residue(const PseudoDiffOp& calL_j) {
    const Window& w = calL_j.window;
    const PseudoDiffOp left = op_mul(calL_j, PseudoDiffOp::monomial(w, -1));
    const PseudoDiffOp right = op_mul(PseudoDiffOp::monomial(w, 1), calL_j);
    const int depth = *calL_j.truncation - calL_j.max_t1() - 2;
    const PseudoDiffOp inv = op_inverse(shift_difference(w, Expansion::Descending), Expansion::Descending, depth);
    return op_residue(op_mul(op_sub(left, right), inv));
}

} // namespace prymlab
