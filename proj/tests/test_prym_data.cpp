#include "support.hpp"

#include <prymlab/io.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace prymlab;
using namespace testsupport;

namespace {

template <class F>
Errc error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::IoError;
}

const std::array<cplx, 3> kMarked{0.3, cplx(0.7, 0.2), cplx(0.0, 1.1)};

} // namespace

TEST_CASE("cover construction") {
    const auto c = build_cover({24.0, -50.0, 35.0, -10.0, 1.0}); // (t-1)(t-2)(t-3)(t-4)
    CHECK(c.g == 1);
    REQUIRE(c.branch_points.size() == 4);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(c.branch_points[k] - double(k + 1)) < 1e-12);
    CHECK(std::abs(c.v_sheet(10.0).real()) > 0.0);
    CHECK(c.v_sheet(10.0).real() > 0.0);

    CHECK(error_of([] { build_cover({0.0, -6.0, 11.0, -6.0, 1.0}); }) == Errc::RamifiedAtZero);
    // (t-1)^2 (t-2)(t-3)
    CHECK(error_of([] { build_cover({6.0, -17.0, 17.0, -7.0, 1.0}); }) == Errc::NotSquarefree);
    CHECK(error_of([] { build_cover({1.0, 0.0, 1.0}); }) == Errc::BadDegree);
    CHECK(error_of([] { build_cover_from_roots({1.0, 2.0, 3.0}); }) == Errc::BadDegree);
}

TEST_CASE("elliptic periods agree with the AGM") {
    for (auto roots : {std::vector<cplx>{-2.0, -1.0, 1.0, 2.0}, std::vector<cplx>{1.0, 2.0, 3.0, 4.0}}) {
        const auto C = build_cover_from_roots(roots);
        const auto r = cross_check_elliptic(C);
        CHECK(r.supported);
        CHECK(r.discrepancy < 1e-10);
        const auto bad = cross_check_elliptic(C, 1e-3);
        CHECK(bad.discrepancy > 1e-5);
    }
}

TEST_CASE("period matrix invariances") {
    const auto C = build_cover_from_roots({-2.0, -1.0, 1.0, 2.0});
    std::vector<cplx> scaled{-4.0, -2.0, 2.0, 4.0};
    const auto a = period_matrix(C), b = period_matrix(build_cover_from_roots(scaled));
    CHECK(std::abs(a.Pi.matrix()(0, 0) - b.Pi.matrix()(0, 0)) < 1e-9);

    const auto C2 = build_cover_from_roots({1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
    const auto p = period_matrix(C2);
    CHECK(p.symmetry_residual < 1e-8);
    Eigen::SelfAdjointEigenSolver<RMat> es(p.Pi.imag());
    CHECK(es.eigenvalues().minCoeff() > 0.0);

    // doubling the starting order moves nothing beyond the convergence threshold
    const auto q = period_matrix(C2, 128);
    CHECK((q.a_periods - p.a_periods).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((q.b_periods - p.b_periods).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((q.Pi.matrix() - p.Pi.matrix()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("Abel-Prym map") {
    for (auto roots : {std::vector<cplx>{-2.0, -1.0, 1.0, 2.0}, std::vector<cplx>{1.0, 2.0, 3.0, 4.0, 5.0, 6.0}}) {
        const auto C = build_cover_from_roots(roots);
        const auto per = period_matrix(C);
        const int g = C.g;
        CHECK(max_abs(abel_integral(C, C.branch_points[0], 0.0)) == 0.0);

        std::mt19937_64 rng(21 + g);
        int accepted = 0;
        while (accepted < 20) {
            const cplx x = rand_c(rng, 1.6);
            if (detail::branch_distance(C, x * x) < 0.05 || std::abs(x) < 0.05) continue;
            ++accepted;
            const auto P = point_on_sheet(C, x);
            const CVec a = abel_prym(C, per, P);
            // sigma P reached along a path looping around a different branch point
            const cplx around = C.branch_points[1] + cplx(0.0, 0.7);
            const CVec b = abel_prym(C, per, sigma(P), {}, {around});
            CHECK(lattice_distance(per.Pi, a + b) < 1e-8);
        }

        // homotopic routes: the detour triangle below contains no branch point
        const cplx x = cplx(0.4, 0.9);
        const auto P = point_on_sheet(C, x);
        const CVec direct = abel_prym(C, per, P);
        const cplx mid = 0.5 * (C.branch_points[0] + x * x);
        const CVec bent = abel_prym(C, per, P, {}, {mid + cplx(0.0, 0.05)});
        CHECK((direct - bent).norm() < 1e-9);

        AbelOptions fine;
        fine.quad_order = 256;
        CHECK((abel_prym(C, per, P, fine) - direct).norm() < 1e-9);
    }
}

TEST_CASE("Prym data construction") {
    const auto C = build_cover_from_roots({-2.0, -1.0, 1.0, 2.0});
    const auto per = period_matrix(C);
    const auto d = make_prym_data(C, per, kMarked, cplx(0.5, 0.6));
    const auto P1 = point_on_sheet(C, kMarked[0]);
    const CVec plus = abel_prym(C, per, P1), minus = abel_prym(C, per, sigma(P1));
    CHECK((-minus + d.U).norm() == 0.0); // U built from the other lift, -A(P1-), is -U
    CHECK((2.0 * d.U - (minus - plus)).norm() == 0.0);
    CHECK(d.base_point == C.branch_points[0]);

    // x2 = -x1 lands P2+ on sigma(P1+)'s partner over the same t, forcing U = V
    std::array<cplx, 3> bad{0.3, -0.3, cplx(0.0, 1.1)};
    bool rejected = false;
    try {
        make_prym_data(C, per, bad, cplx(0.5, 0.6));
    } catch (const Error& e) {
        rejected = e.code() == Errc::DegenerateMarkedPoints;
    }
    CHECK(rejected);

    // a marked point over a branch point is rejected as well
    std::array<cplx, 3> on_branch{1.0, cplx(0.7, 0.2), cplx(0.0, 1.1)};
    CHECK(error_of([&] { make_prym_data(C, per, on_branch, cplx(0.5, 0.6)); }) == Errc::DegenerateMarkedPoints);
}

TEST_CASE("Prym data JSON round trip is bit exact") {
    const auto C = build_cover_from_roots({1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
    const auto d = make_prym_data(C, period_matrix(C), kMarked, cplx(0.5, 0.6));
    const auto j = io::to_json(d);
    const auto e = io::prym_data_from(io::json::parse(j.dump()));
    CHECK((e.Pi.matrix().array() == d.Pi.matrix().array()).all());
    CHECK((e.A.array() == d.A.array()).all());
    CHECK((e.U.array() == d.U.array()).all());
    CHECK((e.V.array() == d.V.array()).all());
    CHECK((e.W.array() == d.W.array()).all());
    CHECK(e.marked_x == d.marked_x);

    auto broken = j;
    broken.erase("W");
    CHECK(error_of([&] { io::prym_data_from(broken); }) == Errc::ConfigError);
    CHECK(io::unhex(io::hex(0.1), "x") == 0.1);
}
