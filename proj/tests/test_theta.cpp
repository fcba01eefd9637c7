#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace prymlab;
using namespace testsupport;

namespace {

// Plain partial sum of the one-variable theta in extended precision.
std::complex<long double> theta1d_oracle(std::complex<long double> tau, std::complex<long double> z,
                                         int radius) {
    const long double PI = 3.141592653589793238462643383279502884L;
    const std::complex<long double> J(0.0L, 1.0L);
    std::complex<long double> s = 0.0L;
    for (int m = -radius; m <= radius; ++m) {
        const long double mm = m;
        s += std::exp(2.0L * PI * J * z * mm + PI * J * tau * mm * mm);
    }
    return s;
}

PeriodMatrix pm1(cplx tau) {
    CMat B(1, 1);
    B(0, 0) = tau;
    return validate_period_matrix(B);
}

} // namespace

TEST_CASE("period matrix validation") {
    CMat a(1, 1);
    a(0, 0) = I;
    CHECK(validate_period_matrix(a).g() == 1);

    CMat b(1, 1);
    b(0, 0) = 1.0;
    try {
        validate_period_matrix(b);
        FAIL("accepted a real matrix");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotPositiveDefinite);
    }

    CMat c(2, 2);
    c << I, 1.0, 0.0, I;
    try {
        validate_period_matrix(c);
        FAIL("accepted an asymmetric matrix");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotSymmetric);
    }
}

TEST_CASE("theta at the square lattice matches direct summation") {
    const auto P = pm1(I);
    const cplx v = theta(P, cvec({0.0}));
    const auto ref = theta1d_oracle({0.0L, 1.0L}, 0.0L, 20);
    CHECK(std::abs(v - cplx(double(ref.real()), double(ref.imag()))) < 1e-10);
    // frozen oracle output
    CHECK(std::abs(v - 1.0864348112133080146) < 1e-10);
    CHECK(std::abs(v.imag()) < 1e-15);
}

TEST_CASE("one-variable theta agrees with an extended-precision partial sum") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> re(-0.5, 0.5), im(0.6, 1.6);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const cplx tau(re(rng), im(rng));
        const cplx z = rand_c(rng, 1.0);
        const auto P = pm1(tau);
        const cplx v = theta(P, cvec({z}));
        const auto ref = theta1d_oracle({tau.real(), tau.imag()}, {z.real(), z.imag()}, 25);
        const cplx r(double(ref.real()), double(ref.imag()));
        worst = std::max(worst, std::abs(v - r) / std::max(1.0, std::abs(r)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("theta periodicity, parity and factorization") {
    std::mt19937_64 rng(12);
    for (int g : {1, 2}) {
        for (int k = 0; k < 20; ++k) {
            const auto P = validate_period_matrix(rand_period_matrix(rng, g));
            const CVec z = rand_cvec(rng, g, 0.8);
            const cplx t0 = theta(P, z);
            for (int j = 0; j < g; ++j) {
                CVec e = CVec::Zero(g);
                e[j] = 1.0;
                CHECK(std::abs(theta(P, z + e) - t0) < 1e-12 * (1 + std::abs(t0)));
            }
            CHECK(std::abs(theta(P, -z) - t0) < 1e-12 * (1 + std::abs(t0)));
        }
    }
    CMat D = CMat::Zero(2, 2);
    D(0, 0) = D(1, 1) = I;
    const auto P2 = validate_period_matrix(D);
    const cplx t1 = theta(pm1(I), cvec({0.0}));
    CHECK(std::abs(theta(P2, CVec::Zero(2)) - t1 * t1) < 1e-13);
}

TEST_CASE("quasi-periodicity factor") {
    const auto P = pm1(I);
    CHECK(std::abs(theta_quasi_factor(P, cvec({0.3}), IVec::Zero(1)) - 1.0) == 0.0);
    IVec q(1);
    q << 1;
    const cplx mu = theta_quasi_factor(P, cvec({0.3}), q);
    CHECK(std::abs(mu - std::exp(-pi * I * I - 2.0 * pi * I * 0.3)) < 1e-15);

    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> di(-2, 2);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const int g = 1 + k % 2;
        const auto B = validate_period_matrix(rand_period_matrix(rng, g));
        const CVec z = rand_cvec(rng, g, 0.7);
        IVec p(g), qq(g);
        for (int j = 0; j < g; ++j) p[j] = di(rng), qq[j] = di(rng);
        const CVec lam = to_cvec(p) + B.matrix() * to_cvec(qq);
        const cplx lhs = theta(B, z + lam);
        const cplx rhs = theta_quasi_factor(B, z, qq) * theta(B, z);
        const double scale = std::abs(lhs) + std::abs(rhs);
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    CHECK(worst < 1e-11);
}

TEST_CASE("second-order theta functions") {
    const auto P = pm1(I);
    const auto P2 = doubled(P);
    const cplx a = theta_second_order(P2, cvec({0.0}), RVec::Zero(1));
    CHECK(std::abs(a - theta(pm1(2.0 * I), cvec({0.0}))) < 1e-14);

    std::mt19937_64 rng(14);
    for (int g : {1, 2}) {
        const auto B = validate_period_matrix(rand_period_matrix(rng, g));
        const auto B2 = doubled(B);
        const CVec z = rand_cvec(rng, g, 0.6);
        for (int i = 0; i < (1 << g); ++i) {
            const RVec e = half_char(g, i);
            const cplx v = theta_second_order(B2, z, e);
            CHECK(std::abs(theta_second_order_via_theta(B, B2, z, e) - v) < 1e-12 * (1 + std::abs(v)));
            CHECK(std::abs(theta_second_order(B2, -z, e) - v) < 1e-12 * (1 + std::abs(v)));
            for (int j = 0; j < g; ++j) {
                CVec ej = CVec::Zero(g);
                ej[j] = 1.0;
                CHECK(std::abs(theta_second_order(B2, z + ej, e) - v) < 1e-12 * (1 + std::abs(v)));
            }
        }
    }
}

TEST_CASE("addition formula") {
    std::mt19937_64 rng(15);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const int g = 1 + k % 2;
        const auto B = validate_period_matrix(rand_period_matrix(rng, g));
        const auto B2 = doubled(B);
        const CVec z = rand_cvec(rng, g, 0.6), w = rand_cvec(rng, g, 0.6);
        const cplx lhs = theta(B, z + w) * theta(B, z - w);
        const CVec kz = kummer(B2, z).components, kw = kummer(B2, w).components;
        const cplx rhs = (kz.array() * kw.array()).sum();
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("Kummer map") {
    std::mt19937_64 rng(16);
    const auto B = validate_period_matrix(rand_period_matrix(rng, 2));
    const auto B2 = doubled(B);
    const auto P1 = pm1(0.2 + 1.1 * I);
    CHECK(kummer(doubled(P1), cvec({0.3})).components.size() == 2);
    for (int k = 0; k < 10; ++k) {
        const CVec z = rand_cvec(rng, 2, 0.6);
        IVec p(2), q(2);
        p << k % 3 - 1, 1;
        q << 1, -(k % 2);
        const CVec lam = to_cvec(p) + B.matrix() * to_cvec(q);
        const CVec a = kummer(B2, z).components;
        CHECK(projective_distance(a, kummer(B2, z + lam).components) < 1e-10);
        CHECK((kummer(B2, -z).components - a).cwiseAbs().maxCoeff() < 1e-12 * a.norm());
    }
}

TEST_CASE("directional derivative") {
    std::mt19937_64 rng(17);
    const auto B = validate_period_matrix(rand_period_matrix(rng, 2));
    CHECK(theta_directional_derivative(B, rand_cvec(rng, 2), CVec::Zero(2)) == cplx(0.0));
    for (int k = 0; k < 10; ++k) {
        const CVec z = rand_cvec(rng, 2, 0.6), d = rand_cvec(rng, 2, 1.0);
        const double h = 1e-5;
        const cplx fd = (theta(B, z + h * d) - theta(B, z - h * d)) / (2.0 * h);
        const cplx an = theta_directional_derivative(B, z, d);
        CHECK(std::abs(fd - an) < 1e-7 * std::max(1.0, std::abs(an)));
        CHECK(std::abs(theta_directional_derivative(B, CVec::Zero(2), d)) < 1e-12);
    }
}

TEST_CASE("theta divisor points") {
    const cplx tau(0.25, 0.9);
    const auto P = pm1(tau);
    const auto dp = find_theta_zero(P, cvec({0.0}), cvec({1.0}));
    CHECK(dp.residual < 1e-12 * dp.scale);
    // the zero differs from (1 + tau)/2 by a lattice vector
    const cplx d = dp.z[0] - 0.5 * (1.0 + tau);
    const double qn = d.imag() / tau.imag();
    const double pn = (d - std::round(qn) * tau).real();
    CHECK(std::abs(qn - std::round(qn)) < 1e-10);
    CHECK(std::abs(pn - std::round(pn)) < 1e-10);

    std::mt19937_64 rng(18);
    const auto B = validate_period_matrix(rand_period_matrix(rng, 2));
    const CVec z0 = rand_cvec(rng, 2, 0.5), dir = rand_cvec(rng, 2, 1.0);
    const auto a = find_theta_zero(B, z0, dir);
    CHECK(a.residual < 1e-12 * a.scale);
    // a second seed near the first converges to the same point
    const auto b = refine_theta_zero(B, z0, dir, a.t + 0.01, 1e-12 * a.scale, a.scale);
    REQUIRE(b.has_value());
    CHECK((b->z - a.z).norm() < 1e-10);
}

TEST_CASE("truncation control") {
    std::mt19937_64 rng(19);
    const auto B = validate_period_matrix(rand_period_matrix(rng, 2));
    const CVec z = rand_cvec(rng, 2, 0.6);
    const cplx ref = theta(B, z, ThetaPolicy{1e-300, 200});
    double prev = 1e300;
    for (double tol : {1e-2, 1e-3, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-14}) {
        const double dev = std::abs(theta(B, z, ThetaPolicy{tol, 200}) - ref);
        CHECK(dev <= prev);
        CHECK(dev <= tol * 10.0);
        prev = dev;
    }
    try {
        theta(B, z, ThetaPolicy{1e-15, 2});
        FAIL("cap not enforced");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::RadiusCapExceeded);
    }
}
