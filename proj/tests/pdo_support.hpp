#pragma once

#include "support.hpp"

#include <prymlab/pdo.hpp>

#include <limits>
#include <optional>

// Brute-force oracles for operator tests: operators applied to explicit sequences.

namespace pdotest {

using namespace prymlab;
using testsupport::rand_c;

inline const double kNaN = std::numeric_limits<double>::quiet_NaN();

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline ComplexGrid rand_grid(std::mt19937_64& rng, const Window& w) {
    return ComplexGrid::generate(w, [&](int, int) { return rand_c(rng); });
}

// random finite operator with T1 exponents in [lo, hi] and T2 exponents in [-t2, t2]
inline PseudoDiffOp rand_op(std::mt19937_64& rng, const Window& w, int lo, int hi, int t2 = 0) {
    PseudoDiffOp d;
    d.window = w;
    for (int i = lo; i <= hi; ++i)
        for (int j = -t2; j <= t2; ++j) d.add_term(i, j, rand_grid(rng, w));
    return d;
}

inline PseudoDiffOp with_expansion(PseudoDiffOp d, Expansion e) {
    d.expansion = e;
    return d;
}

// (D f)(n, m) = sum a_ij(n, m) f(n + i, m + j); NaN where a read leaves the sequence's window
inline ComplexGrid apply(const PseudoDiffOp& d, const ComplexGrid& f) {
    return ComplexGrid::generate(d.window, [&](int n, int m) {
        cplx s = 0.0;
        for (const auto& [k, g] : d.terms) {
            if (!f.window().contains(n + k.first, m + k.second)) return cplx(kNaN, kNaN);
            s += g(n, m) * f(n + k.first, m + k.second);
        }
        return s;
    });
}

// random sequence vanishing for n < edge (from_below) or n > edge
inline ComplexGrid one_sided(std::mt19937_64& rng, const Window& box, int edge, bool from_below) {
    return ComplexGrid::generate(box, [&](int n, int) {
        const cplx z = rand_c(rng);
        return (from_below ? n >= edge : n <= edge) ? z : cplx(0.0);
    });
}

struct Compared {
    double diff = 0.0, scale = 0.0;
    int count = 0;
};

// compares where `keep(n)` holds and both values are defined
template <class Keep>
Compared compare(const ComplexGrid& a, const ComplexGrid& b, Keep keep) {
    Compared c;
    const Window w = a.window().intersect(b.window());
    for (int n = w.n_lo; n <= w.n_hi; ++n)
        for (int m = w.m_lo; m <= w.m_hi; ++m) {
            if (!keep(n) || !finite(a(n, m)) || !finite(b(n, m))) continue;
            c.diff = std::max(c.diff, std::abs(a(n, m) - b(n, m)));
            c.scale = std::max({c.scale, std::abs(a(n, m)), std::abs(b(n, m))});
            ++c.count;
        }
    return c;
}

// Sites where applying an operator with truncation t to a sequence supported on n >= P
// (descending) or n <= P (ascending) involves no unrepresented exponent.
struct ExactSites {
    Expansion dir;
    std::optional<int> t;
    int P;
    bool operator()(int n) const {
        if (!t) return true;
        return dir == Expansion::Descending ? n <= P - *t : n >= P - *t;
    }
};

inline bool all_finite_on_window(const PseudoDiffOp& d) {
    for (const auto& [k, g] : d.terms)
        if (!(g.window() == d.window) || !g.finite()) return false;
    return true;
}

inline double rel_diff(const PseudoDiffOp& a, const PseudoDiffOp& b) {
    return op_max_diff(a, b) / std::max({op_max_abs(a), op_max_abs(b), 1e-300});
}

// Phi Phi^{-1} - 1 coefficient by coefficient, each relative to the sum of |products| feeding it
inline double inverse_residual(const PseudoDiffOp& phi, const PseudoDiffOp& inv) {
    double worst = 0.0;
    const int lo = *inv.truncation + phi.max_t1();
    for (int e = lo; e <= 0; ++e) {
        Window w = phi.window;
        for (const auto& [k, g] : phi.terms) w = w.intersect(inv.window.shifted(-k.first, 0));
        for (int n = w.n_lo; n <= w.n_hi; ++n)
            for (int m = w.m_lo; m <= w.m_hi; ++m) {
                cplx s = e == 0 ? -1.0 : 0.0;
                double big = std::abs(s);
                for (const auto& [k, a] : phi.terms) {
                    const auto it = inv.terms.find({e - k.first, 0});
                    if (it == inv.terms.end()) continue;
                    const cplx t = a(n, m) * it->second(n + k.first, m);
                    s += t;
                    big += std::abs(t);
                }
                worst = std::max(worst, std::abs(s) / big);
            }
    }
    return worst;
}

inline ComplexGrid smooth_tau(std::mt19937_64& rng, const Window& w) {
    std::uniform_real_distribution<double> ph(0.0, 6.28), fr(0.05, 0.25);
    const double a = fr(rng), b = fr(rng), c = fr(rng), d = fr(rng), p = ph(rng), q = ph(rng);
    return ComplexGrid::generate(w, [&](int n, int m) {
        return 1.0 + 0.3 * std::sin(a * n + b * m + p) + cplx(0, 0.2) * std::cos(c * n - d * m + q);
    });
}

inline const Window kBox{-30, 30, -6, 14};
inline const Window kOpWindow{-14, 14, 0, 8};

} // namespace pdotest
