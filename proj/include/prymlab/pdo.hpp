#pragma once

#include "errors.hpp"
#include "identity.hpp"
#include "linalg.hpp"
#include "report.hpp"

#include <map>
#include <optional>
#include <utility>
#include <vector>

// Pseudo-difference operators in two shifts T1 (n -> n+1) and T2 (m -> m+1) with coefficient
// grids on finite lattice windows. A term a T1^i T2^j acts by (a T^{ij} f)(n,m) = a(n,m) f(n+i,m+j).

namespace prymlab {

struct Window {
    int n_lo = 0, n_hi = -1, m_lo = 0, m_hi = -1;

    bool empty() const { return n_lo > n_hi || m_lo > m_hi; }
    bool contains(int n, int m) const { return n >= n_lo && n <= n_hi && m >= m_lo && m <= m_hi; }
    int n_size() const { return n_hi - n_lo + 1; }
    int m_size() const { return m_hi - m_lo + 1; }
    Window shifted(int dn, int dm) const { return {n_lo + dn, n_hi + dn, m_lo + dm, m_hi + dm}; }
    Window intersect(const Window& o) const {
        return {std::max(n_lo, o.n_lo), std::min(n_hi, o.n_hi), std::max(m_lo, o.m_lo), std::min(m_hi, o.m_hi)};
    }
    bool operator==(const Window&) const = default;
};

// Values on a window, stored with a ring of NaN guard cells so that an off-by-one read poisons
// the result instead of returning a plausible number. Reads beyond the guard ring throw.
class ComplexGrid {
public:
    static constexpr int kGuard = 3;

    ComplexGrid() = default;
    explicit ComplexGrid(const Window& w, cplx fill = 0.0);

    template <class F>
    static ComplexGrid generate(const Window& w, F&& f) {
        ComplexGrid g(w);
        for (int n = w.n_lo; n <= w.n_hi; ++n)
            for (int m = w.m_lo; m <= w.m_hi; ++m) g.ref(n, m) = f(n, m);
        return g;
    }

    const Window& window() const { return w_; }
    cplx operator()(int n, int m) const;
    cplx& ref(int n, int m);

    // (t^{i,j} g)(n,m) = g(n+i, m+j), valid on the window moved by (-i,-j)
    ComplexGrid shifted(int i, int j) const;
    ComplexGrid restricted(const Window& w) const;
    bool finite() const;
    double max_abs() const;

private:
    std::size_t index(int n, int m) const;

    Window w_;
    int stride_ = 0;
    std::vector<cplx> data_;
};

// Elementwise arithmetic on the common window.
ComplexGrid operator+(const ComplexGrid& a, const ComplexGrid& b);
ComplexGrid operator-(const ComplexGrid& a, const ComplexGrid& b);
ComplexGrid operator*(const ComplexGrid& a, const ComplexGrid& b);
ComplexGrid operator/(const ComplexGrid& a, const ComplexGrid& b);
ComplexGrid operator*(cplx s, const ComplexGrid& a);
ComplexGrid operator-(const ComplexGrid& a);
double max_abs_diff(const ComplexGrid& a, const ComplexGrid& b);

// Descending: series in T1^{-1} (the ring completed towards negative powers), ascending: in T1.
enum class Expansion { Descending, Ascending };

struct PseudoDiffOp {
    Window window;
    std::map<std::pair<int, int>, ComplexGrid> terms; // (T1 exponent, T2 exponent) -> coefficient
    Expansion expansion = Expansion::Descending;
    // T1 exponents beyond this bound are not represented: below it for descending series, above
    // it for ascending ones. Empty for finite operators, which are exact.
    std::optional<int> truncation;

    static PseudoDiffOp identity(const Window& w);
    static PseudoDiffOp monomial(const Window& w, int i, int j = 0, cplx c = 1.0);
    static PseudoDiffOp monomial(const ComplexGrid& a, int i, int j = 0);

    bool exact() const { return !truncation; }
    bool one_variable() const;
    // whether the T1 exponent e is inside the represented range
    bool known(int e) const;
    int max_t1() const;
    int min_t1() const;
    // zero grid on the window when the term is absent; throws TruncationTooShallow if e is unknown
    ComplexGrid coeff(int i, int j = 0) const;
    void add_term(int i, int j, const ComplexGrid& a);
};

PseudoDiffOp op_add(const PseudoDiffOp& a, const PseudoDiffOp& b);
PseudoDiffOp op_sub(const PseudoDiffOp& a, const PseudoDiffOp& b);
PseudoDiffOp op_scale(const ComplexGrid& f, const PseudoDiffOp& a); // f * a
PseudoDiffOp op_scale(cplx s, const PseudoDiffOp& a);

// (a T^{ij})(b T^{kl}) = a (t^{ij} b) T^{i+k, j+l}. The truncation of the result is the lowest
// (descending) exponent all of whose contributions are known. Throws WindowExhausted.
PseudoDiffOp op_mul(const PseudoDiffOp& a, const PseudoDiffOp& b);
PseudoDiffOp op_mul(std::initializer_list<const PseudoDiffOp*> factors);
PseudoDiffOp op_commutator(const PseudoDiffOp& a, const PseudoDiffOp& b);

// (a T^{ij})* = T^{-i,-j} a; swaps the expansion direction.
PseudoDiffOp op_adjoint(const PseudoDiffOp& d);

// T1^0 coefficient of a one-variable operator.
ComplexGrid op_residue(const PseudoDiffOp& d);

// Inverse of a one-variable series by Neumann recursion, represented up to T1 exponent `limit`
// (down to it for descending, up to it for ascending). Throws NonInvertibleLeading when the
// leading coefficient drops below 1e-12 somewhere.
PseudoDiffOp op_inverse(const PseudoDiffOp& d, Expansion dir, int limit);

// Terms with T1 exponent > 0 and < 0 (one-variable operators).
PseudoDiffOp positive_part(const PseudoDiffOp& d);
PseudoDiffOp negative_part(const PseudoDiffOp& d);

// Drops terms beyond `limit` in the direction of the expansion and records the truncation.
PseudoDiffOp truncated(const PseudoDiffOp& d, int limit);
PseudoDiffOp restricted(const PseudoDiffOp& d, const Window& w);

// Largest coefficient difference over the T1 exponents represented in both operators, on the
// common window. Terms present in only one of them count against the zero grid.
double op_max_diff(const PseudoDiffOp& a, const PseudoDiffOp& b);
double op_max_abs(const PseudoDiffOp& d);

// Formal pairing of the right action k^{-n} D1 (with fT = T^{-1}f) and the left action D2 k^n:
// the k^0 coefficient of their product. Equals res_T(D2 D1).
ComplexGrid k_pairing(const PseudoDiffOp& d1, const PseudoDiffOp& d2);

// ---- the ideal generated by H = T1 T2 - u (T1 - T2) - 1 --------------------------------------

PseudoDiffOp schroedinger_operator(const ComplexGrid& u);

// T2 modulo the ideal as a one-variable series, (T1 + u)^{-1} (u T1 + 1), expanded in T1^{-1}
// (descending) or T1 (ascending), represented to `limit`.
PseudoDiffOp t2_series(const ComplexGrid& u, Expansion dir, int limit);

// Normal form D1 + a T2 with D1 one-variable. Terms a T1^i T2 are reduced exactly with
// T1 T2 = u T1 - u T2 + 1 and T1^{-1} T2 = 1 + T1^{-1}/t1^{-1}u - T2/t1^{-1}u; other powers of T2
// go through t2_series in the chosen direction. For finite operators of T2-degree at most one
// the result is exact and independent of the direction.
PseudoDiffOp reduce_mod_H(const PseudoDiffOp& d, const ComplexGrid& u, Expansion dir, int limit);
// The remaining a T2 replaced by a t2_series as well: the unique one-variable representative.
PseudoDiffOp reduce_mod_H_one_variable(const PseudoDiffOp& d, const ComplexGrid& u, Expansion dir, int limit);

// ---- formal wave solution and the operators built from it ------------------------------------

struct FormalKSeries {
    std::vector<ComplexGrid> xi; // psi = k^{sign n} sum_s xi_s k^{-s}
    int k_sign = 1;
    double compatibility = 0.0; // largest relative mismatch of the second propagation route
};

// u and v0 = (t1 tau)(t1^{-1} tau)/tau^2, u = C (t1 tau)(t2 tau)/((t1 t2 tau) tau).
struct AnsatzFields {
    ComplexGrid u, v0;
};
AnsatzFields ansatz_fields(const ComplexGrid& tau, cplx C);

// Solves H psi = 0, L psi = k psi order by order. The T2 relation propagates in m, the L relation
// along the bottom row in n; each xi_s is 1 at the window's lower-left corner. The L relation on
// the other rows is the compatibility check. Throws CompatibilityFailure beyond `tolerance`.
FormalKSeries formal_wave_solution(const ComplexGrid& u, const PseudoDiffOp& calL, int s_max,
                                   double tolerance = 1e-9);

// Phi = sum xi_s T1^{-s}, so that psi = Phi k^n.
PseudoDiffOp wave_operator(const FormalKSeries& ks);
PseudoDiffOp wave_operator_inverse(const PseudoDiffOp& phi);
// Coefficients of L psi - k psi through order s_max, relative to the largest term at each order.
double eigen_residual(const PseudoDiffOp& calL, const FormalKSeries& ks);

// The coefficients f_ij of L^j = sum_{i <= j-1} f_ij T1^i (T1 - T1^{-1}), keyed by i.
std::map<int, ComplexGrid> t1_decomposition(const PseudoDiffOp& calL_j, int j);

// L_j = (f_0 + sum_{i=1}^{j-1} f_i T^i + T^{-i} f_i)(T1 - T1^{-1}). Checks (L_j)_+ = (L^j)_+
// and throws TruncationTooShallow when the needed coefficients are not represented.
struct LjResult {
    PseudoDiffOp L;
    PseudoDiffOp calL_j;
    std::map<int, ComplexGrid> f;
    double positive_mismatch = 0.0;
};
LjResult build_Lj(const PseudoDiffOp& calL, int j);

// (T1 - T1^{-1})^{-1} L* (T1 - T1^{-1}) in the ascending ring.
PseudoDiffOp dual_operator(const PseudoDiffOp& calL, int limit);

// F~_j from the decomposition, f_{1j} - t1 f_{-1j}, and independently as
// res_T((L^j T1^{-1} - T1 L^j)(T1 - T1^{-1})^{-1}).
ComplexGrid f_tilde(const std::map<int, ComplexGrid>& f);
ComplexGrid f_tilde_residue(const PseudoDiffOp& calL_j);

// ---- the discrete Novikov-Veselov structure ---------------------------------------------------

struct NvOptions {
    int j = 1;
    int s_max = 8;
    cplx C{1.0};
    double tolerance = 1e-9;
};

// u, v0 from the ansatz and L = sum v_s T1^{1-s} solving h_s = 0 (coefficients of [H, L] mod the
// ideal), with v_s = 1 on the bottom row of its window for s >= 1.
struct LaxPair {
    ComplexGrid u, v0;
    PseudoDiffOp H, L;
    std::vector<ComplexGrid> h;     // T1^{2-s} coefficients of [H, L] modulo the ideal, s = 0..s_max
    std::vector<double> h_residual; // max |h_s| relative to h_scale
    double h_scale = 1.0;           // largest coefficient of H L and L H
};
LaxPair solve_lax_operator(const ComplexGrid& tau, cplx C, int s_max);

struct NvReport {
    IdentityReport shape;      // off-shape coefficients of [L_j, H] mod the ideal
    IdentityReport flow;       // b_j against t2 F~_j - F~_j
    IdentityReport h0;         // h_0 under the ansatz
    IdentityReport hs;         // h_s, s >= 1, after solving for v_s
    IdentityReport potential_relation;       // j = 1 only: v0 (t1^{-1}u) - u (t2 v0)
    double f_tilde_routes = 0.0; // decomposition vs residue formula for F~_j
    double v_ratio_deviation = 0.0; // max |v/v0 - 1|, v read off L_1 built from the wave operator
    double wave_compatibility = 0.0;
    double wave_L_mismatch = 0.0;   // L rebuilt as Phi T1 Phi^{-1} against the solved L, relative
    ComplexGrid b;             // coefficient of the (T1 - T2) shape
    ComplexGrid F;             // F~_j
    bool pass = false;
};
NvReport nv_structure_check(const ComplexGrid& tau, const NvOptions& opt = {});

// ---- fitting F~_1 against theta derivatives ------------------------------------------------

struct ThetaDerivativeSample {
    cplx F;
    CVec gradient; // gradient in Z of ln tau^nu(Z) - ln tau^{nu+1}(Z + U)
    int group = 0;  // samples of one group share the additive constant
    int parity = 0; // samples with parity 1 also carry the shared parity offset
    int n = 0, m = 0;
    CVec Z;
};

struct ThetaDerivativeFit {
    std::vector<cplx> offsets; // per group; with a single group this is v_1
    std::vector<int> groups;   // group label of each offset
    cplx parity_offset{};      // fitted only when some sample has parity 1
    CVec direction;            // V_1
    double residual = 0.0;     // max |misfit| / max |F|
    std::vector<double> misfits; // |misfit| / max |F| per sample, in sample order
    int samples = 0;
};
// Linear least squares for F = offset(group) + parity * parity_offset + (V, gradient). Throws RankDeficientFit when the
// design matrix is numerically rank deficient.
ThetaDerivativeFit theta_derivative_fit(const std::vector<ThetaDerivativeSample>& samples);

// tau(n, m) = theta(nU + mV + (1 - nu)W + Z) (c1^m c2^n)^(nu - 1/2) with nu the parity of n + m,
// divided by exp of a real quadratic in (n, m) so that wide windows do not overflow. The gauge
// changes the ansatz by constants only: u_field = C * ansatz u and the true v0 = v0_factor * ansatz v0.
struct PrymTauGrid {
    ComplexGrid tau;
    cplx C;
    double v0_factor = 1.0;
};
PrymTauGrid prym_tau_grid(const PrymFrame& f, const SchroedingerConstants& k, const CVec& Z, const Window& w);

// Gradient in Z of ln tau^nu(Z_nm) - ln tau^{nu+1}(Z_{n+1,m}), theta parts only.
CVec log_tau_gradient_difference(const PrymFrame& f, int n, int m, const CVec& Z);

// F~_1 over the lattice window for each Z, rescaled to the ungauged v0. The corner initial data
// fix v_1 only up to a function of n, so every (Z, column) pair gets its own group; the parity
// of n + m is passed through for the shared parity offset.
std::vector<ThetaDerivativeSample> theta_derivative_samples(const PrymFrame& f, const SchroedingerConstants& k, const std::vector<CVec>& Zs,
                                      const Window& w, int s_max = 3);

} // namespace prymlab
