#include <prymlab/pdo.hpp>

#include <limits>
#include <stdexcept>
#include <string>

namespace prymlab {

namespace {

const cplx kPoison{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};

Window common(const ComplexGrid& a, const ComplexGrid& b) {
    const Window w = a.window().intersect(b.window());
    if (w.empty()) throw Error(Errc::WindowExhausted, "grids do not overlap");
    return w;
}

} // namespace

ComplexGrid::ComplexGrid(const Window& w, cplx fill) : w_(w) {
    if (w.empty()) throw Error(Errc::WindowExhausted, "empty grid window");
    stride_ = w.m_size() + 2 * kGuard;
    data_.assign(std::size_t(w.n_size() + 2 * kGuard) * std::size_t(stride_), kPoison);
    for (int n = w.n_lo; n <= w.n_hi; ++n)
        for (int m = w.m_lo; m <= w.m_hi; ++m) data_[index(n, m)] = fill;
}

std::size_t ComplexGrid::index(int n, int m) const {
    return std::size_t(n - w_.n_lo + kGuard) * std::size_t(stride_) + std::size_t(m - w_.m_lo + kGuard);
}

cplx ComplexGrid::operator()(int n, int m) const {
    if (n < w_.n_lo - kGuard || n > w_.n_hi + kGuard || m < w_.m_lo - kGuard || m > w_.m_hi + kGuard)
        throw std::out_of_range("grid read at (" + std::to_string(n) + ", " + std::to_string(m) + ") far outside its window");
    return data_[index(n, m)];
}

cplx& ComplexGrid::ref(int n, int m) {
    if (!w_.contains(n, m))
        throw std::out_of_range("grid write at (" + std::to_string(n) + ", " + std::to_string(m) + ") outside its window");
    return data_[index(n, m)];
}

ComplexGrid ComplexGrid::shifted(int i, int j) const {
    if (i == 0 && j == 0) return *this;
    return generate(w_.shifted(-i, -j), [&](int n, int m) { return (*this)(n + i, m + j); });
}

ComplexGrid ComplexGrid::restricted(const Window& w) const {
    if (w == w_) return *this;
    const Window r = w.intersect(w_);
    if (r.empty()) throw Error(Errc::WindowExhausted, "restriction leaves no sites");
    return generate(r, [&](int n, int m) { return (*this)(n, m); });
}

bool ComplexGrid::finite() const {
    for (int n = w_.n_lo; n <= w_.n_hi; ++n)
        for (int m = w_.m_lo; m <= w_.m_hi; ++m) {
            const cplx z = (*this)(n, m);
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        }
    return true;
}

double ComplexGrid::max_abs() const {
    double r = 0.0;
    for (int n = w_.n_lo; n <= w_.n_hi; ++n)
        for (int m = w_.m_lo; m <= w_.m_hi; ++m) {
            const double a = std::abs((*this)(n, m));
            // NaN must not disappear in the max
            if (!(a <= r)) r = std::isnan(a) ? std::numeric_limits<double>::infinity() : a;
        }
    return r;
}

ComplexGrid operator+(const ComplexGrid& a, const ComplexGrid& b) {
    return ComplexGrid::generate(common(a, b), [&](int n, int m) { return a(n, m) + b(n, m); });
}

ComplexGrid operator-(const ComplexGrid& a, const ComplexGrid& b) {
    return ComplexGrid::generate(common(a, b), [&](int n, int m) { return a(n, m) - b(n, m); });
}

ComplexGrid operator*(const ComplexGrid& a, const ComplexGrid& b) {
    return ComplexGrid::generate(common(a, b), [&](int n, int m) { return a(n, m) * b(n, m); });
}

ComplexGrid operator/(const ComplexGrid& a, const ComplexGrid& b) {
    return ComplexGrid::generate(common(a, b), [&](int n, int m) { return a(n, m) / b(n, m); });
}

ComplexGrid operator*(cplx s, const ComplexGrid& a) {
    return ComplexGrid::generate(a.window(), [&](int n, int m) { return s * a(n, m); });
}

ComplexGrid operator-(const ComplexGrid& a) { return cplx(-1.0) * a; }

double max_abs_diff(const ComplexGrid& a, const ComplexGrid& b) { return (a - b).max_abs(); }

} // namespace prymlab
