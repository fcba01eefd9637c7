#pragma once

#include <prymlab/theta.hpp>

#include <random>

namespace testsupport {

using namespace prymlab;

inline cplx rand_c(std::mt19937_64& rng, double s = 1.0) {
    std::uniform_real_distribution<double> u(-s, s);
    return {u(rng), u(rng)};
}

inline CVec rand_cvec(std::mt19937_64& rng, int g, double s = 1.0) {
    CVec v(g);
    for (int k = 0; k < g; ++k) v[k] = rand_c(rng, s);
    return v;
}

// Symmetric with Im part = A A^T + 0.6 I, entries of moderate size.
inline CMat rand_period_matrix(std::mt19937_64& rng, int g) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    RMat A(g, g), X(g, g);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) A(i, j) = u(rng), X(i, j) = u(rng);
    RMat Y = A * A.transpose() + 0.6 * RMat::Identity(g, g);
    RMat Xs = 0.5 * (X + X.transpose());
    CMat B(g, g);
    for (int i = 0; i < g; ++i)
        for (int j = i; j < g; ++j) B(i, j) = B(j, i) = cplx(Xs(i, j), Y(i, j));
    return B;
}

} // namespace testsupport
