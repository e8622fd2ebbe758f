#include <cmath>

#include "doctest.h"
#include "peaklab/geometry.hpp"

using namespace peaklab;

TEST_CASE("eval_profile on power kinds") {
    const Profile lin = Profile::power(1.0);
    const Profile p15 = Profile::power(1.5);
    CHECK(eval_profile(lin, 0.5) == doctest::Approx(0.5));
    CHECK(eval_profile(p15, 0.0) == 0.0);
    CHECK(eval_profile(p15, 0.25) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK_THROWS_AS(eval_profile(lin, 1.5), ValidationError);
}

TEST_CASE("tabulated profile errors outside its table") {
    const Profile tab(TabulatedKind{{0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}}, 1, 1.0, 1.0, 1.0, 1.0, 0.5);
    CHECK(tab(0.25) == doctest::Approx(0.25));
    const Profile partial(TabulatedKind{{0.0, 0.5}, {0.0, 0.5}}, 1, 1.0, 1.0, 1.0, 1.0, 0.25);
    CHECK_THROWS_AS(partial(0.75), ValidationError);
}

TEST_CASE("profile invariants are validated") {
    // alpha1 - alpha2 outside [0, 2/n) is reported, not rejected
    const auto report = check_hypotheses(Profile(PowerKind{1.0}, 1, 4.0, 1.0, 1.0, 1.0, 0.5), 64, 1e-10);
    CHECK_FALSE(report.h3_ok);
    CHECK_FALSE(report.messages.empty());
    CHECK_THROWS_AS(Profile(PowerKind{1.0}, 0, 1.0, 1.0, 1.0, 1.0, 0.5), ValidationError);
    CHECK_THROWS_AS(Profile(PowerKind{1.0}, 1, 1.0, 1.0, 1.0, 1.0, 1.5), ValidationError);
}

TEST_CASE("default grading") {
    CHECK(default_grading(Profile::power(1.0)) == 1.5);
    CHECK(default_grading(Profile::power(1.5)) == 1.5);
    CHECK(default_grading(Profile::power(1.8)) == 2.0);
}

TEST_CASE("H2 integral for a(x) = x") {
    const auto report = check_hypotheses(Profile::power(1.0), 256, 1e-10);
    CHECK(report.h1_ok);
    CHECK(report.h3_ok);
    REQUIRE(report.h2_finite);
    // int_0^1 x ln^2(2x) dx = 1/4 - ln2/2 + ln^2(2)/2
    const double l2 = std::log(2.0);
    CHECK(report.h2_integral == doctest::Approx(0.25 - l2 / 2 + l2 * l2 / 2).epsilon(1e-8));
    CHECK(report.h2_integral == doctest::Approx(0.143652916679128).epsilon(1e-8));
    CHECK(h2_weight_function(Profile::power(1.0), [](double) { return 1.0; }, 0.5) == 0.0);
}

TEST_CASE("H2 diverges for a(x) = x^3, n = 2") {
    const auto report = check_hypotheses(Profile::power(3.0, 2), 256, 1e-10);
    CHECK(report.h1_ok);
    CHECK(report.h3_ok);
    CHECK_FALSE(report.h2_finite);
    CHECK(std::isinf(report.h2_integral));
}

TEST_CASE("H2 finite across alpha in [1, 2)") {
    for (double alpha : {1.0, 1.25, 1.5, 1.75, 1.95}) {
        CAPTURE(alpha);
        const auto coarse = check_hypotheses(Profile::power(alpha), 64, 1e-8);
        const auto fine = check_hypotheses(Profile::power(alpha), 64, 1e-11);
        CHECK(coarse.h2_finite);
        CHECK(fine.h2_finite);
    }
    CHECK_THROWS_AS(check_hypotheses(Profile::power(1.0), 8, 1e-10), ValidationError);
}

TEST_CASE("build_interval_mesh") {
    const auto uniform = build_interval_mesh(4, 1.0);
    const std::vector<double> expect_u = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (int i = 0; i < 5; ++i) CHECK(uniform->nodes()[i] == doctest::Approx(expect_u[i]));
    const auto graded = build_interval_mesh(4, 2.0);
    const std::vector<double> expect_g = {0.0, 0.0625, 0.25, 0.5625, 1.0};
    for (int i = 0; i < 5; ++i) CHECK(graded->nodes()[i] == doctest::Approx(expect_g[i]));
    const auto fine = build_interval_mesh(128, 2.0);
    CHECK(fine->min_element_length() == doctest::Approx(1.0 / (128.0 * 128.0)));
    CHECK(fine->gauss_points().size() >= 3);
    CHECK_THROWS_AS(build_interval_mesh(3, 1.0), ValidationError);
    CHECK_THROWS_AS(build_interval_mesh(8, 0.5), ValidationError);
}

TEST_CASE("build_thin_mesh invariants") {
    const Profile p = Profile::power(1.0);
    const auto coarse = build_thin_mesh(p, 8, 1.0, 1.0);
    int at_origin = 0;
    for (const auto& v : coarse->vertices()) {
        if (v.x == 0.0) ++at_origin;
        CHECK(std::abs(v.y) <= p(v.x) + 1e-12);
    }
    CHECK(at_origin == 1);
    CHECK(coarse->columns().front().intervals == 0);
    for (int t = 0; t < static_cast<int>(coarse->triangles().size()); ++t) CHECK(coarse->signed_area(t) > 0.0);
    for (const auto& c : coarse->columns()) {
        if (c.intervals > 0) CHECK(c.intervals % 2 == 0);
    }

    const auto fine = build_thin_mesh(p, 64, 1.0, 1.5);
    CHECK(fine->total_area() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(fine->total_area() == doctest::Approx(fine->polygon_area()).epsilon(1e-13));
    CHECK_THROWS_AS(build_thin_mesh(p, 4, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(build_thin_mesh(Profile::power(1.0, 2), 16, 1.0, 1.0), ValidationError);
}

TEST_CASE("thin mesh boundary tags and nesting") {
    const Profile p = Profile::power(1.5);
    const auto coarse = build_thin_mesh(p, 16, 1.0, 1.5);
    const auto fine = build_thin_mesh(p, 32, 1.0, 1.5);
    for (const auto& c : coarse->columns()) {
        bool found = false;
        for (const auto& f : fine->columns()) found = found || std::abs(f.x - c.x) < 1e-14;
        CHECK(found);
    }
    int right = 0;
    for (const auto& e : coarse->boundary_edges()) {
        if (e.tag == BoundaryTag::right) ++right;
    }
    CHECK(right == coarse->columns().back().intervals);
    CHECK(coarse->layers()->size() == static_cast<int>(coarse->columns().size()));
}
