#include <doctest.h>

#include <cmath>
#include <random>

#include "reloc/model.hpp"

using namespace reloc;

TEST_CASE("quadratic wage values and derivatives") {
    const auto w = WageProfile::quadratic(1.0);
    const auto mid = wage_eval(w, 0.5);
    CHECK(mid.w == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(std::abs(mid.dw) < 1e-15);
    CHECK(mid.d2w == doctest::Approx(-2.0));

    const auto left = wage_eval(w, 0.0);
    CHECK(std::abs(left.w) < 1e-15);
    CHECK(left.dw == doctest::Approx(1.0));
    CHECK(left.d2w == doctest::Approx(-2.0));
    CHECK(std::abs(wage_eval(w, 1.0).w) < 1e-15);

    const auto outside = wage_eval(w, -0.3);
    CHECK(outside.w < 0.0);
    CHECK(outside.dw >= 0.0);  // plateau begins at -blend_width
    CHECK(wage_eval(w, -0.2).dw > 0.0);

    WageSpec wide;
    wide.blend_width = 0.5;
    const WageProfile ww(wide);
    CHECK(wage_eval(ww, -0.3).w < 0.0);
    CHECK(wage_eval(ww, -0.3).dw > 0.0);
}

TEST_CASE("wage evaluation outside the window is reported") {
    const auto w = WageProfile::quadratic();
    CHECK_THROWS_AS(wage_eval(w, -1.5), OutOfWindow);
    CHECK_THROWS_AS(wage_eval(w, 2.5), OutOfWindow);
    CHECK_NOTHROW(w.at(-5.0));  // unchecked path stays defined on the plateau
    CHECK(w.at(-5.0).w == doctest::Approx(-0.25));
}

TEST_CASE("extension is C2 and has the required sign structure") {
    for (double h : {0.5, 1.0, 3.0}) {
        const auto w = WageProfile::quadratic(h);
        CHECK(w.continuity_defect() <= 1e-6);
        for (double x = -0.999; x < 0.0; x += 0.01) CHECK(w.at(x).w < 0.0);
        for (double x = 1.001; x < 2.0; x += 0.01) CHECK(w.at(x).w < 0.0);
        for (double x = 0.01; x < 1.0; x += 0.01) CHECK(w.at(x).w > 0.0);
        for (double x = -0.24; x < 0.0; x += 0.01) CHECK(w.at(x).dw > 0.0);
        for (double x = 1.01; x < 1.25; x += 0.01) CHECK(w.at(x).dw < 0.0);
    }
}

TEST_CASE("one-sided finite differences agree at every knot") {
    const auto w = WageProfile::spline({0.0, 0.3, 0.6, 1.0}, {0.0, 0.2, 0.22, 0.0});
    for (double k : w.knots()) {
        const double e = 1e-10;
        const auto lo = w.at(k - e), hi = w.at(k + e);
        CHECK(std::abs(lo.w - hi.w) <= 1e-6 * std::max(1.0, std::abs(lo.w)));
        CHECK(std::abs(lo.dw - hi.dw) <= 1e-6 * std::max(1.0, std::abs(lo.dw)));
        CHECK(std::abs(lo.d2w - hi.d2w) <= 1e-6 * std::max(1.0, std::abs(lo.d2w)));
    }
    CHECK(w.continuity_defect() <= 1e-6);
}

TEST_CASE("spline input is validated") {
    CHECK_THROWS_AS(WageProfile::spline({0.0, 0.5}, {0.0, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(WageProfile::spline({0.0, 0.5, 1.0}, {0.1, 0.2, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(WageProfile::spline({0.0, 0.5, 0.9}, {0.0, 0.2, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(WageProfile::spline({0.0, 0.5, 1.0}, {0.0, -0.2, 0.0}), InvalidArgument);
}

TEST_CASE("peak and sup values") {
    const auto w = WageProfile::quadratic(2.0);
    CHECK(w.peak_location() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(w.max_on_unit() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(w.sup_abs_w() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(w.sup_abs_dw() >= 2.0);
    CHECK(w.concave_on_unit());

    const auto c = WageProfile::constant(0.3);
    CHECK(c.at(0.7).w == 0.3);
    CHECK(c.at(0.7).dw == 0.0);
    CHECK(c.sup_abs_dw() == 0.0);
}

TEST_CASE("parameter validation names the invariant") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    p.theta = 1.2;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("theta ∈ (0,1)"), InvalidArgument);
    p = {};
    p.eta = 0.0;
    p.xi = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.x0 = 1.5;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.a0 = -1.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("control caps") {
    ModelParams p;
    p.T = 1.0;
    p.a0 = 1.0;
    p.p = 1.0;
    p.r = p.rho = 0.05;
    p.theta = 0.5;
    p.xi = 1.0;
    const ControlCaps caps = control_caps_from_bounds(p, 0.25, 1.0);
    CHECK(caps.mu == 1.0);
    const double expected_c = 1.05 * std::pow(1.25 / ((1.0 - std::exp(-0.05)) / 0.05), 2.0);
    CHECK(caps.C == doctest::Approx(expected_c).epsilon(1e-14));
    CHECK(caps.Z == doctest::Approx(1.05 * std::exp(0.05) / 2.0).epsilon(1e-14));

    p.xi = 0.0;
    const ControlCaps fallback = control_caps_from_bounds(p, 0.25, 1.0, 3.0);
    CHECK_FALSE(fallback.z_from_bound);
    CHECK(fallback.Z == 3.0);
}

TEST_CASE("property: caps strictly exceed the bound and bound consumption") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        ModelParams p;
        p.theta = 0.1 + 0.8 * u(rng);
        p.rho = 0.01 + 0.2 * u(rng);
        p.r = 0.01 + 0.2 * u(rng);
        p.T = 0.5 + 40 * u(rng);
        p.a0 = 3 * u(rng);
        p.p = 0.2 + 2 * u(rng);
        const double supw = 2 * u(rng);
        const ControlCaps caps = control_caps_from_bounds(p, supw, 1.0);
        const double mu = std::exp(std::abs(p.r - p.rho) * p.T);
        CHECK(caps.mu == doctest::Approx(mu));
        CHECK(caps.mu >= 1.0);
        const double bound = std::max(1.0, std::pow(mu, 1.0 / p.theta)) * (p.a0 + p.T * supw) /
                             (p.p * (1.0 - std::exp(-p.r * p.T)) / p.r);
        CHECK(std::pow(caps.C, p.theta) > bound * (1.0 - 1e-15) * 1.0);
        CHECK(caps.C > bound);
    }
}

TEST_CASE("regime classification") {
    ModelParams p;
    p.theta = 0.5;
    p.r = 0.05;
    p.rho = 0.10;
    CHECK(classify_regime(p).tag == RegimeTag::Positive);
    CHECK(classify_regime(p).subcase == PositiveSubcase::above_r);
    p.rho = 0.02;
    CHECK(classify_regime(p).tag == RegimeTag::Negative);
    p.rho = 0.025;
    CHECK(classify_regime(p).tag == RegimeTag::Boundary);
    p.rho = 0.04;
    CHECK(classify_regime(p).subcase == PositiveSubcase::below_r);
    p.rho = 0.05;
    CHECK(classify_regime(p).subcase == PositiveSubcase::equal_r);
}

TEST_CASE("property: regime tag invariant under joint scaling of rho and r") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        ModelParams p;
        p.theta = 0.05 + 0.9 * u(rng);
        p.rho = 0.001 + 0.3 * u(rng);
        p.r = 0.001 + 0.3 * u(rng);
        const double k = std::exp(4.0 * u(rng) - 2.0);
        ModelParams q = p;
        q.rho *= k;
        q.r *= k;
        if (std::abs(p.rho - p.r * (1 - p.theta)) < 1e-9) continue;
        CHECK(classify_regime(p).tag == classify_regime(q).tag);
    }
}
