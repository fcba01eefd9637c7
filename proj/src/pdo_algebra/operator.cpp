#include <prymlab/pdo.hpp>

#include <algorithm>
#include <climits>
#include <stdexcept>
#include <string>

namespace prymlab {

namespace {

// exponent e lies in the unrepresented part of a series truncated at t
bool beyond(Expansion dir, int e, int t) { return dir == Expansion::Descending ? e < t : e > t; }
int tighter(Expansion dir, int a, int b) { return dir == Expansion::Descending ? std::max(a, b) : std::min(a, b); }

Window require(const Window& w, const char* what) {
    if (w.empty()) throw Error(Errc::WindowExhausted, what);
    return w;
}

// Expansion shared by two operands; exact operands adopt the other's.
Expansion joint_expansion(const PseudoDiffOp& a, const PseudoDiffOp& b) {
    if (a.truncation && b.truncation && a.expansion != b.expansion)
        throw std::invalid_argument("cannot combine series expanded in opposite directions");
    return a.truncation ? a.expansion : b.truncation ? b.expansion : a.expansion;
}

std::optional<int> joint_truncation(Expansion dir, std::optional<int> a, std::optional<int> b) {
    if (a && b) return tighter(dir, *a, *b);
    return a ? a : b;
}

void restrict_terms(PseudoDiffOp& d) {
    for (auto& [k, g] : d.terms) g = g.restricted(d.window);
}

} // namespace

PseudoDiffOp PseudoDiffOp::identity(const Window& w) { return monomial(w, 0, 0, 1.0); }

PseudoDiffOp PseudoDiffOp::monomial(const Window& w, int i, int j, cplx c) {
    return monomial(ComplexGrid(w, c), i, j);
}

PseudoDiffOp PseudoDiffOp::monomial(const ComplexGrid& a, int i, int j) {
    PseudoDiffOp d;
    d.window = a.window();
    d.terms.emplace(std::pair{i, j}, a);
    return d;
}

bool PseudoDiffOp::one_variable() const {
    return std::all_of(terms.begin(), terms.end(), [](const auto& t) { return t.first.second == 0; });
}

bool PseudoDiffOp::known(int e) const { return !truncation || !beyond(expansion, e, *truncation); }

int PseudoDiffOp::max_t1() const {
    int r = INT_MIN;
    for (const auto& t : terms) r = std::max(r, t.first.first);
    return r;
}

int PseudoDiffOp::min_t1() const {
    int r = INT_MAX;
    for (const auto& t : terms) r = std::min(r, t.first.first);
    return r;
}

ComplexGrid PseudoDiffOp::coeff(int i, int j) const {
    if (!known(i))
        throw Error(Errc::TruncationTooShallow, "coefficient of T1^" + std::to_string(i) + " lies beyond the truncation");
    const auto it = terms.find({i, j});
    return it == terms.end() ? ComplexGrid(window) : it->second.restricted(window);
}

void PseudoDiffOp::add_term(int i, int j, const ComplexGrid& a) {
    if (!known(i)) return;
    const ComplexGrid r = a.restricted(window);
    auto it = terms.find({i, j});
    if (it == terms.end())
        terms.emplace(std::pair{i, j}, r);
    else
        it->second = it->second + r;
}

PseudoDiffOp op_add(const PseudoDiffOp& a, const PseudoDiffOp& b) {
    PseudoDiffOp r;
    r.expansion = joint_expansion(a, b);
    r.truncation = joint_truncation(r.expansion, a.truncation, b.truncation);
    r.window = require(a.window.intersect(b.window), "sum of operators on disjoint windows");
    for (const auto& [k, g] : a.terms) r.add_term(k.first, k.second, g);
    for (const auto& [k, g] : b.terms) r.add_term(k.first, k.second, g);
    return r;
}

PseudoDiffOp op_scale(cplx s, const PseudoDiffOp& a) {
    PseudoDiffOp r = a;
    for (auto& [k, g] : r.terms) g = s * g;
    return r;
}

PseudoDiffOp op_sub(const PseudoDiffOp& a, const PseudoDiffOp& b) { return op_add(a, op_scale(-1.0, b)); }

PseudoDiffOp op_scale(const ComplexGrid& f, const PseudoDiffOp& a) {
    PseudoDiffOp r = a;
    r.window = require(a.window.intersect(f.window()), "scaling by a grid on a disjoint window");
    for (auto& [k, g] : r.terms) g = f.restricted(r.window) * g.restricted(r.window);
    return r;
}

PseudoDiffOp op_mul(const PseudoDiffOp& a, const PseudoDiffOp& b) {
    PseudoDiffOp r;
    r.expansion = joint_expansion(a, b);
    const bool desc = r.expansion == Expansion::Descending;
    // an unknown tail of one factor reaches the product through the extreme term of the other
    auto reach = [&](const PseudoDiffOp& trunc, const PseudoDiffOp& other) -> std::optional<int> {
        if (!trunc.truncation) return std::nullopt;
        if (other.terms.empty())
            return other.truncation ? std::optional<int>(*trunc.truncation + *other.truncation) : std::nullopt;
        return *trunc.truncation + (desc ? other.max_t1() : other.min_t1());
    };
    r.truncation = joint_truncation(r.expansion, reach(a, b), reach(b, a));

    Window w = a.window;
    for (const auto& [k, g] : a.terms) w = w.intersect(b.window.shifted(-k.first, -k.second));
    r.window = require(w, "product window exhausted by the shifts of the left factor");

    for (const auto& [ka, ga] : a.terms)
        for (const auto& [kb, gb] : b.terms) {
            const int e = ka.first + kb.first;
            if (!r.known(e)) continue;
            const ComplexGrid sb = gb.shifted(ka.first, ka.second);
            r.add_term(e, ka.second + kb.second,
                       ComplexGrid::generate(r.window, [&](int n, int m) { return ga(n, m) * sb(n, m); }));
        }
    return r;
}

PseudoDiffOp op_mul(std::initializer_list<const PseudoDiffOp*> factors) {
    auto it = factors.begin();
    PseudoDiffOp r = **it;
    for (++it; it != factors.end(); ++it) r = op_mul(r, **it);
    return r;
}

PseudoDiffOp op_commutator(const PseudoDiffOp& a, const PseudoDiffOp& b) {
    return op_sub(op_mul(a, b), op_mul(b, a));
}

PseudoDiffOp op_adjoint(const PseudoDiffOp& d) {
    PseudoDiffOp r;
    r.expansion = d.expansion == Expansion::Descending ? Expansion::Ascending : Expansion::Descending;
    if (d.truncation) r.truncation = -*d.truncation;
    Window w = d.window;
    for (const auto& [k, g] : d.terms) w = w.intersect(d.window.shifted(k.first, k.second));
    r.window = require(w, "adjoint window exhausted");
    for (const auto& [k, g] : d.terms) r.add_term(-k.first, -k.second, g.shifted(-k.first, -k.second));
    return r;
}

ComplexGrid op_residue(const PseudoDiffOp& d) {
    if (!d.one_variable()) throw std::invalid_argument("residue of an operator involving T2");
    return d.coeff(0, 0);
}

PseudoDiffOp truncated(const PseudoDiffOp& d, int limit) {
    PseudoDiffOp r = d;
    r.truncation = joint_truncation(d.expansion, d.truncation, limit);
    std::erase_if(r.terms, [&](const auto& t) { return !r.known(t.first.first); });
    return r;
}

PseudoDiffOp restricted(const PseudoDiffOp& d, const Window& w) {
    PseudoDiffOp r = d;
    r.window = require(d.window.intersect(w), "restriction leaves no sites");
    restrict_terms(r);
    return r;
}

PseudoDiffOp op_inverse(const PseudoDiffOp& d, Expansion dir, int limit) {
    if (!d.one_variable()) throw std::invalid_argument("inverse of an operator involving T2");
    if (d.truncation && d.expansion != dir)
        throw std::invalid_argument("inverse requested in the direction opposite to the series");
    if (d.terms.empty()) throw Error(Errc::NonInvertibleLeading, "zero operator");
    const bool desc = dir == Expansion::Descending;
    const int p = desc ? d.max_t1() : d.min_t1();
    const ComplexGrid lead = d.terms.at({p, 0});
    double smallest = INFINITY;
    for (int n = lead.window().n_lo; n <= lead.window().n_hi; ++n)
        for (int m = lead.window().m_lo; m <= lead.window().m_hi; ++m) smallest = std::min(smallest, std::abs(lead(n, m)));
    if (!(smallest >= 1e-12)) throw Error(Errc::NonInvertibleLeading, "leading coefficient vanishes on the window");

    // the result is known to (truncation of d) - 2p at best
    if (d.truncation && beyond(dir, limit, *d.truncation - 2 * p))
        throw Error(Errc::TruncationTooShallow, "inverse requested beyond what the series determines");

    // Neumann recursion, one coefficient at a time: with sigma the direction of the series,
    // d = sum_j a_{p + sigma j} T^{p + sigma j} and b_l the coefficients of the inverse,
    // b_{-p} = t^{-p}(1/a_p) and b_{-p + sigma k} = -t^{-p}[(1/a_p) sum_{j=1..k} a_{p+sigma j} t^{p+sigma j} b_{-p+sigma(k-j)}]
    const int sigma = desc ? -1 : 1;
    const int depth = sigma * (limit + p);
    auto a = [&](int j) {
        const auto it = d.terms.find({p + sigma * j, 0});
        return it == d.terms.end() ? nullptr : &it->second;
    };
    std::vector<ComplexGrid> b;
    b.push_back(ComplexGrid::generate(lead.window(), [&](int n, int m) { return 1.0 / lead(n, m); }).shifted(-p, 0));
    for (int k = 1; k <= depth; ++k) {
        ComplexGrid sum;
        bool any = false;
        for (int j = 1; j <= k; ++j) {
            const ComplexGrid* aj = a(j);
            if (!aj) continue;
            const ComplexGrid term = *aj * b[std::size_t(k - j)].shifted(p + sigma * j, 0);
            sum = any ? sum + term : term;
            any = true;
        }
        b.push_back(any ? (-(sum / lead)).shifted(-p, 0) : ComplexGrid(b.back().window()));
    }
    PseudoDiffOp out;
    out.expansion = dir;
    out.truncation = limit;
    out.window = d.window;
    for (const auto& g : b) out.window = out.window.intersect(g.window());
    if (out.window.empty()) throw Error(Errc::WindowExhausted, "inverse window exhausted");
    for (int k = 0; k <= depth; ++k) out.add_term(-p + sigma * k, 0, b[std::size_t(k)]);
    return out;
}

namespace {

PseudoDiffOp part(const PseudoDiffOp& d, bool positive) {
    if (!d.one_variable()) throw std::invalid_argument("positive/negative part of an operator involving T2");
    PseudoDiffOp r;
    r.window = d.window;
    r.expansion = d.expansion;
    // the part is infinite exactly when it extends into the unknown tail
    const bool tail_side = positive == (d.expansion == Expansion::Ascending);
    if (d.truncation) {
        if (tail_side)
            r.truncation = d.truncation;
        else if (!d.known(positive ? 1 : -1))
            throw Error(Errc::TruncationTooShallow, "part reaches beyond the truncation");
    }
    for (const auto& [k, g] : d.terms)
        if (positive ? k.first > 0 : k.first < 0) r.terms.emplace(k, g);
    return r;
}

} // namespace

PseudoDiffOp positive_part(const PseudoDiffOp& d) { return part(d, true); }
PseudoDiffOp negative_part(const PseudoDiffOp& d) { return part(d, false); }

double op_max_diff(const PseudoDiffOp& a, const PseudoDiffOp& b) {
    const Window w = require(a.window.intersect(b.window), "comparison of operators on disjoint windows");
    std::map<std::pair<int, int>, int> keys;
    for (const auto& t : a.terms) keys[t.first];
    for (const auto& t : b.terms) keys[t.first];
    double r = 0.0;
    for (const auto& [k, unused] : keys) {
        if (!a.known(k.first) || !b.known(k.first)) continue;
        const ComplexGrid ga = a.coeff(k.first, k.second).restricted(w);
        const ComplexGrid gb = b.coeff(k.first, k.second).restricted(w);
        r = std::max(r, max_abs_diff(ga, gb));
    }
    return r;
}

double op_max_abs(const PseudoDiffOp& d) {
    double r = 0.0;
    for (const auto& [k, g] : d.terms) r = std::max(r, g.max_abs());
    return r;
}

ComplexGrid k_pairing(const PseudoDiffOp& d1, const PseudoDiffOp& d2) {
    if (!d1.one_variable() || !d2.one_variable()) throw std::invalid_argument("pairing of operators involving T2");
    // the k^0 coefficient is complete only if no unknown exponent s of one side meets an exponent
    // -s the other side may carry
    auto tail_meets = [](const PseudoDiffOp& t, const PseudoDiffOp& o) {
        if (!t.truncation) return false;
        const bool desc = t.expansion == Expansion::Descending;
        const int edge = desc ? 1 - *t.truncation : -*t.truncation - 1; // mirrored tail: r >= edge or r <= edge
        auto in_mirror = [&](int r) { return desc ? r >= edge : r <= edge; };
        for (const auto& [k, g] : o.terms)
            if (in_mirror(k.first)) return true;
        if (!o.truncation) return false;
        const bool odesc = o.expansion == Expansion::Descending;
        if (odesc != desc) return true;
        return desc ? *o.truncation - 1 >= edge : *o.truncation + 1 <= edge;
    };
    if (tail_meets(d1, d2) || tail_meets(d2, d1))
        throw Error(Errc::TruncationTooShallow, "pairing needs coefficients beyond the truncation");
    Window w = d2.window;
    for (const auto& [k, g] : d1.terms) w = w.intersect(d1.window.shifted(k.first, 0));
    w = require(w, "pairing window exhausted");
    ComplexGrid out(w);
    // (k^{-n} a_s T^s) = a_s(n - s) k^{-(n - s)}, (b_r T^r k^n) = b_r(n) k^{n + r}
    for (const auto& [k, a] : d1.terms) {
        const int s = k.first;
        const auto it = d2.terms.find({-s, 0});
        if (it == d2.terms.end()) continue;
        const ComplexGrid& b = it->second;
        for (int n = w.n_lo; n <= w.n_hi; ++n)
            for (int m = w.m_lo; m <= w.m_hi; ++m) out.ref(n, m) += a(n - s, m) * b(n, m);
    }
    return out;
}

} // namespace prymlab
