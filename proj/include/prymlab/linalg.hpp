#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>

namespace prymlab {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Bilinear (non-conjugating) pairing used throughout: (a, b) = sum a_k b_k.
template <class A, class B>
inline cplx bdot(const A& a, const B& b) {
    cplx s{0.0, 0.0};
    for (Eigen::Index k = 0; k < a.size(); ++k) s += cplx(a[k]) * cplx(b[k]);
    return s;
}

inline CVec to_cvec(const IVec& v) { return v.cast<double>().cast<cplx>(); }

inline CVec cvec(std::initializer_list<cplx> xs) {
    CVec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (auto x : xs) v[k++] = x;
    return v;
}

inline double max_abs(const CVec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

} // namespace prymlab
