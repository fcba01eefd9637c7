#include <prymlab/pdo.hpp>

#include <stdexcept>

namespace prymlab {

namespace {

PseudoDiffOp tagged(PseudoDiffOp d, Expansion dir) {
    d.expansion = dir;
    return d;
}

// (T1 + u) and (u T1 + 1)
PseudoDiffOp shift_plus(const ComplexGrid& u, Expansion dir) {
    PseudoDiffOp d = tagged(PseudoDiffOp::monomial(u.window(), 1, 0), dir);
    d.add_term(0, 0, u);
    return d;
}

PseudoDiffOp scaled_shift_plus_one(const ComplexGrid& u, Expansion dir) {
    PseudoDiffOp d = tagged(PseudoDiffOp::monomial(u, 1, 0), dir);
    d.add_term(0, 0, ComplexGrid(u.window(), 1.0));
    return d;
}

// den^{-1} num with the inverse taken deep enough for the product to reach `limit`
PseudoDiffOp quotient(const PseudoDiffOp& den, const PseudoDiffOp& num, Expansion dir, int limit) {
    const int edge = dir == Expansion::Descending ? num.max_t1() : num.min_t1();
    return truncated(op_mul(op_inverse(den, dir, limit - edge), num), limit);
}

PseudoDiffOp t2_inverse_series(const ComplexGrid& u, Expansion dir, int limit) {
    return quotient(scaled_shift_plus_one(u, dir), shift_plus(u, dir), dir, limit);
}

// T2^j as a one-variable series: S_{j-1} ... S_0 for j > 0, S_{-j}^{-1} ... S_{-1}^{-1} for j < 0,
// where S_k is built from t2^k u.
PseudoDiffOp t2_power_series(const ComplexGrid& u, int j, Expansion dir, int limit) {
    PseudoDiffOp r = tagged(PseudoDiffOp::identity(u.window()), dir);
    if (j > 0)
        for (int k = j - 1; k >= 0; --k) r = truncated(op_mul(r, t2_series(u.shifted(0, k), dir, limit)), limit);
    else
        for (int k = j; k <= -1; ++k) r = truncated(op_mul(r, t2_inverse_series(u.shifted(0, k), dir, limit)), limit);
    return r;
}

bool exact_degree_one(const PseudoDiffOp& d) {
    if (d.truncation) return false;
    for (const auto& t : d.terms)
        if (t.first.second != 0 && t.first.second != 1) return false;
    return true;
}

// D1 + a T2 for an exact operator of T2-degree 0 and 1
PseudoDiffOp exact_reduce(const PseudoDiffOp& d, const ComplexGrid& u) {
    std::map<int, ComplexGrid> flat, with_t2;
    auto acc = [](std::map<int, ComplexGrid>& m, int i, const ComplexGrid& g) {
        auto it = m.find(i);
        if (it == m.end())
            m.emplace(i, g);
        else
            it->second = it->second + g;
    };
    for (const auto& [k, g] : d.terms) acc(k.second == 0 ? flat : with_t2, k.first, g);

    // T1^i T2 = T1^{i-1} (u T1 - u T2 + 1), i > 0
    while (!with_t2.empty() && with_t2.rbegin()->first > 0) {
        const auto it = std::prev(with_t2.end());
        const int i = it->first;
        const ComplexGrid c = it->second;
        with_t2.erase(it);
        const ComplexGrid cu = c * u.shifted(i - 1, 0);
        acc(flat, i, cu);
        acc(flat, i - 1, c);
        acc(with_t2, i - 1, -cu);
    }
    // T1^i T2 = T1^{i+1} (1 + T1^{-1}/t1^{-1}u - T2/t1^{-1}u), i < 0
    while (!with_t2.empty() && with_t2.begin()->first < 0) {
        const auto it = with_t2.begin();
        const int i = it->first;
        const ComplexGrid c = it->second;
        with_t2.erase(it);
        const ComplexGrid ca = c / u.shifted(i, 0);
        acc(flat, i + 1, c);
        acc(flat, i, ca);
        acc(with_t2, i + 1, -ca);
    }

    PseudoDiffOp r;
    r.expansion = d.expansion;
    r.window = d.window;
    for (const auto& [i, g] : flat) r.window = r.window.intersect(g.window());
    for (const auto& [i, g] : with_t2) r.window = r.window.intersect(g.window());
    if (r.window.empty()) throw Error(Errc::WindowExhausted, "reduction window exhausted");
    for (const auto& [i, g] : flat) r.add_term(i, 0, g);
    for (const auto& [i, g] : with_t2) r.add_term(i, 1, g);
    return r;
}

} // namespace

PseudoDiffOp schroedinger_operator(const ComplexGrid& u) {
    const Window& w = u.window();
    PseudoDiffOp h = PseudoDiffOp::monomial(w, 1, 1);
    h.add_term(1, 0, -u);
    h.add_term(0, 1, u);
    h.add_term(0, 0, ComplexGrid(w, -1.0));
    return h;
}

PseudoDiffOp t2_series(const ComplexGrid& u, Expansion dir, int limit) {
    return quotient(shift_plus(u, dir), scaled_shift_plus_one(u, dir), dir, limit);
}

PseudoDiffOp reduce_mod_H(const PseudoDiffOp& d, const ComplexGrid& u, Expansion dir, int limit) {
    if (exact_degree_one(d)) return exact_reduce(d, u);
    return reduce_mod_H_one_variable(d, u, dir, limit);
}

PseudoDiffOp reduce_mod_H_one_variable(const PseudoDiffOp& d, const ComplexGrid& u, Expansion dir, int limit) {
    if (d.truncation && d.expansion != dir)
        throw std::invalid_argument("reduction direction differs from the expansion of the series");
    if (d.truncation && !d.known(limit))
        throw Error(Errc::TruncationTooShallow, "reduction requested beyond the truncation of the operator");
    const bool desc = dir == Expansion::Descending;

    if (exact_degree_one(d)) {
        PseudoDiffOp r = tagged(exact_reduce(d, u), dir);
        const auto it = r.terms.find({0, 1});
        if (it == r.terms.end()) return truncated(r, limit);
        const PseudoDiffOp a = tagged(PseudoDiffOp::monomial(it->second, 0, 0), dir);
        r.terms.erase(it);
        return truncated(op_add(r, op_mul(a, t2_series(u, dir, limit))), limit);
    }

    std::map<int, PseudoDiffOp> by_power;
    for (const auto& [k, g] : d.terms) {
        auto [it, fresh] = by_power.try_emplace(k.second);
        if (fresh) {
            it->second.window = d.window;
            it->second.expansion = dir;
            it->second.truncation = d.truncation;
        }
        it->second.add_term(k.first, 0, g);
    }
    PseudoDiffOp r = tagged(PseudoDiffOp{}, dir);
    r.window = d.window;
    r.truncation = limit;
    for (const auto& [j, dj] : by_power) {
        if (j == 0) {
            r = op_add(r, truncated(dj, limit));
            continue;
        }
        const int edge = desc ? dj.max_t1() : dj.min_t1();
        r = op_add(r, truncated(op_mul(dj, t2_power_series(u, j, dir, limit - edge)), limit));
    }
    return r;
}

} // namespace prymlab
