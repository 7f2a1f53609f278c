#include <doctest.h>

#include <cmath>
#include <random>

#include "reloc/analysis.hpp"
#include "reloc/dynamics.hpp"
#include "reloc/quadrature.hpp"
#include "reloc/shooting.hpp"

using namespace reloc;

namespace {

const WageProfile& quad() {
    static const WageProfile w = WageProfile::quadratic(1.0);
    return w;
}

}  // namespace

TEST_CASE("rhs_cauchy basic cases") {
    ModelParams p;
    auto [dx, dy] = rhs_cauchy(1.0, 0.3, 0.0, 1.0, p, quad());
    CHECK(dx == 0.0);
    CHECK(dy != 0.0);

    auto at_peak = rhs_cauchy(2.0, 0.5, 0.7, 1.3, p, quad());
    CHECK(std::abs(at_peak.second) < 1e-15);

    const auto flat = WageProfile::constant(0.4);
    for (double x : {-0.5, 0.2, 0.9})
        for (double y : {-1.0, 0.0, 2.0}) CHECK(rhs_cauchy(0.7, x, y, 2.0, p, flat).second == 0.0);

    const double F = relocation_denominator(1.0, 1.3, p);
    CHECK(rhs_cauchy(1.0, 0.2, 0.9, 1.3, p, quad()).first == doctest::Approx(0.9 / F));
}

TEST_CASE("singular denominator is reported") {
    ModelParams p;
    p.xi = 0.0;
    p.eta = 1.0;
    p.rho = 1.0;
    p.T = 40.0;
    CHECK_THROWS_AS(rhs_cauchy(40.0, 0.3, 0.1, 1.0, p, quad()), SingularDenominator);
    CHECK_THROWS_AS(relocation_rule(0.1, 40.0, 1.0, p), SingularDenominator);
    CHECK_THROWS_AS(integrate_cauchy(p, quad(), 1.0, 0.0, 64), SingularDenominator);
}

TEST_CASE("integrate_cauchy: stationary solution at the peak") {
    ModelParams p;
    p.x0 = 0.5;
    const Path path = integrate_cauchy(p, quad(), 1.0, 0.0, 256);
    CHECK(path.t.front() == 0.0);
    CHECK(path.t.back() == doctest::Approx(p.T).epsilon(1e-15));
    for (std::size_t i = 0; i < path.x.size(); ++i) {
        CHECK(path.x[i] == 0.5);
        CHECK(path.y[i] == 0.0);
    }
}

TEST_CASE("integrate_cauchy: constant wage closed form") {
    ModelParams p;
    p.x0 = 0.2;
    const auto flat = WageProfile::constant(0.3);
    const double lambda1 = 0.8, alpha = 0.05;
    const Path path = integrate_cauchy(p, flat, lambda1, alpha, 512);
    std::vector<double> inv_f(path.t.size());
    for (std::size_t i = 0; i < inv_f.size(); ++i) inv_f[i] = 1.0 / relocation_denominator(path.t[i], lambda1, p);
    const auto G = cumulative_integral(inv_f, path.h);
    for (std::size_t i = 0; i < path.t.size(); ++i) {
        CHECK(path.y[i] == alpha);
        CHECK(path.x[i] == doctest::Approx(p.x0 + alpha * G[i]).epsilon(1e-10));
    }
}

TEST_CASE("integrate_cauchy: too few steps rejected") {
    CHECK_THROWS_AS(integrate_cauchy(ModelParams{}, quad(), 1.0, 0.1, 8), InvalidArgument);
}

TEST_CASE("property: RK4 convergence order in [3.5, 4.5]") {
    ModelParams p;
    p.T = 5.0;
    const double lambda1 = 2.0, alpha = 1.2;
    // Coarse steps keep the error well above rounding.
    const Path ref = integrate_cauchy(p, quad(), lambda1, alpha, 4096);
    double prev = 0.0;
    for (int n : {16, 32, 64}) {
        const Path path = integrate_cauchy(p, quad(), lambda1, alpha, n);
        const double err = std::abs(path.x.back() - ref.x.back()) + std::abs(path.y.back() - ref.y.back());
        if (prev > 0.0) {
            const double order = std::log2(prev / err);
            CHECK(order >= 3.5);
            CHECK(order <= 4.5);
        }
        prev = err;
    }
}

TEST_CASE("consumption_rule") {
    ModelParams p;
    p.p = 1.0;
    p.r = p.rho = 0.05;
    for (double t : {0.0, 3.0, 10.0}) CHECK(consumption_rule(1.0, t, p) == doctest::Approx(1.0));
    p.theta = 0.5;
    CHECK(consumption_rule(16.0, 4.0, p) == doctest::Approx(1.0 / 256.0));

    p.rho = 0.08;
    p.r = 0.03;
    p.p = 1.7;
    p.theta = 0.4;
    const double aT = 2.3;
    const double lambda1 = lambda1_from_aT(aT, p);
    for (double t : {0.0, 2.5, 7.0, 10.0}) {
        const double expected = std::pow(p.p, -1.0 / p.theta) * std::exp((p.rho - p.r) / p.theta * (p.T - t)) * aT;
        CHECK(consumption_rule(lambda1, t, p) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("relocation_rule") {
    ModelParams p;
    CHECK(relocation_rule(0.0, 1.0, 1.0, p) == 0.0);
    p.xi = 0.0;
    p.eta = 0.5;
    CHECK(relocation_rule(0.37, 0.0, 3.0, p) == doctest::Approx(0.37));
}

TEST_CASE("property: consumption and relocation rules maximize the Hamiltonian pieces") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        ModelParams p;
        p.theta = 0.1 + 0.8 * u(rng);
        p.rho = 0.01 + 0.1 * u(rng);
        p.r = 0.01 + 0.1 * u(rng);
        p.p = 0.5 + u(rng);
        p.xi = u(rng);
        p.eta = 0.1 + u(rng);
        const double lambda1 = std::exp(4 * u(rng) - 2), t = 10 * u(rng), p2 = 2 * u(rng) - 1;
        const double c = consumption_rule(lambda1, t, p);
        auto hc = [&](double phi) {
            return std::exp(-p.rho * t) * std::pow(phi, 1 - p.theta) / (1 - p.theta) -
                   lambda1 * std::exp(-p.r * t) * p.p * phi;
        };
        const double z = relocation_rule(p2, t, lambda1, p);
        auto hz = [&](double psi) {
            return p2 * psi - (p.xi * lambda1 * std::exp(-p.r * t) + p.eta * std::exp(-p.rho * t)) * psi * psi;
        };
        for (double s = -0.2; s <= 0.2; s += 0.01) {
            if (s == 0.0) continue;
            CHECK(hc(c) >= hc(c * (1 + s)));
            CHECK(hz(z) >= hz(z + s * std::max(1e-3, std::abs(z))));
        }
    }
}

TEST_CASE("integrate_assets: compounding identities") {
    ModelParams p;
    const int n = 512;
    const double h = p.T / n;
    std::vector<double> x(n + 1, p.x0), c(n + 1, quad().at(p.x0).w / p.p), z(n + 1, 0.0);
    const auto a = integrate_assets(p, quad(), x, c, z, h);
    CHECK(a.front() == p.a0);
    CHECK(a.back() == doctest::Approx(p.a0 * std::exp(p.r * p.T)).epsilon(1e-12));

    const auto zero_wage = WageProfile::constant(0.0);
    std::fill(c.begin(), c.end(), 0.0);
    const auto b = integrate_assets(p, zero_wage, x, c, z, h);
    for (std::size_t i = 0; i < b.size(); ++i)
        CHECK(b[i] == doctest::Approx(p.a0 * std::exp(p.r * h * i)).epsilon(1e-13));

    std::vector<double> short_c(n, 0.0);
    CHECK_THROWS_AS(integrate_assets(p, quad(), x, short_c, z, h), InvalidArgument);
}

TEST_CASE("property: Simpson and RK4 asset endpoints agree to 1e-8") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        ModelParams p;
        p.T = 1 + 29 * u(rng);
        p.r = 0.01 + 0.14 * u(rng);
        p.a0 = 2 * u(rng);
        const int n = default_steps(p.T);
        const double h = p.T / n;
        const double phase = 6 * u(rng), amp = 0.3 * u(rng), level = 0.05 + 0.2 * u(rng);
        std::vector<double> x(n + 1), c(n + 1), z(n + 1);
        for (int i = 0; i <= n; ++i) {
            const double t = h * i;
            x[i] = 0.5 + 0.4 * std::sin(phase + t / p.T * 3.0);
            z[i] = amp * std::cos(phase + t);
            c[i] = level * (1.0 + 0.5 * std::sin(t + phase));
        }
        const auto a = integrate_assets(p, quad(), x, c, z, h);
        const double rk = integrate_assets_rk4(p, quad(), x, c, z, h);
        CHECK(std::abs(a.back() - rk) <= 1e-8 * std::max(1.0, std::abs(rk)));
    }
}

TEST_CASE("objective_eval") {
    ModelParams p;
    const int n = 1024;
    const double h = p.T / n;
    std::vector<double> c(n + 1, 0.0), z(n + 1, 0.0);
    const double aT = 1.7;
    const double bequest = std::exp(-p.rho * p.T) * std::pow(aT, 1 - p.theta) / (1 - p.theta);
    CHECK(objective_eval(p, c, z, aT, h) == doctest::Approx(bequest).epsilon(1e-14));

    const double c0 = 0.4;
    std::fill(c.begin(), c.end(), c0);
    const double closed = std::pow(c0, 1 - p.theta) / (1 - p.theta) * (1 - std::exp(-p.rho * p.T)) / p.rho + bequest;
    CHECK(objective_eval(p, c, z, aT, h) == doctest::Approx(closed).epsilon(1e-12));

    for (int i = 0; i <= n; ++i) z[i] = 0.1 * std::sin(h * i);
    const double J1 = objective_eval(p, c, z, aT, h);
    std::vector<double> penalty(n + 1);
    for (int i = 0; i <= n; ++i) penalty[i] = z[i] * z[i] * std::exp(-p.rho * h * i);
    for (auto& v : z) v *= 2.0;
    const double J2 = objective_eval(p, c, z, aT, h);
    CHECK(J1 - J2 == doctest::Approx(3.0 * p.eta * simpson(penalty, h)).epsilon(1e-10));

    CHECK_THROWS_AS(objective_eval(p, c, z, 0.0, h), InfeasibleTerminalAssets);
}

TEST_CASE("lambda1 and terminal assets") {
    ModelParams p;
    p.r = 0.03;
    p.rho = 0.07;
    CHECK(lambda1_from_aT(1.0, p) == doctest::Approx(std::exp((p.r - p.rho) * p.T)));
    p.r = p.rho = 0.05;
    p.theta = 0.5;
    CHECK(lambda1_from_aT(4.0, p) == doctest::Approx(0.5));
    for (double aT : {1e-3, 0.3, 2.0, 50.0}) CHECK(aT_from_lambda1(lambda1_from_aT(aT, p), p) == doctest::Approx(aT));
    CHECK_THROWS_AS(lambda1_from_aT(0.0, p), InfeasibleTerminalAssets);
}

TEST_CASE("necessary-condition residuals on the baseline extremal") {
    ModelParams p;
    const Extremal ex = solve_extremal(p, quad());
    const ResidualReport rep = verify_necessary_conditions(ex, p, quad());
    CHECK(rep.stationarity_c <= 1e-6);
    CHECK(rep.stationarity_z <= 1e-6);
    CHECK(rep.transversality <= 1e-6);
    CHECK(rep.costate_ode <= 1e-6);
    CHECK(rep.confinement == 0.0);
    CHECK(rep.positivity > 0.0);
    CHECK(rep.passes(1e-6));

    Extremal bumped = ex;
    for (auto& c : bumped.c) c *= 1.1;
    const ResidualReport bad = verify_necessary_conditions(bumped, p, quad());
    CHECK(bad.stationarity_c > 1e-2);
}

TEST_CASE("residuals on the constant-wage closed form") {
    ModelParams p;
    p.rho = 0.08;
    const double W = 0.25;
    const auto flat = WageProfile::constant(W);
    const ConstantWageSolution cf = closed_form_constant_wage(p, W);
    const int n = 2048;
    Path path;
    path.h = p.T / n;
    path.t = uniform_grid(p.T, n);
    path.x.assign(n + 1, p.x0);
    path.y.assign(n + 1, 0.0);
    const Extremal ex = assemble_extremal(p, flat, cf.lambda1, 0.0, path);
    const ResidualReport rep = verify_necessary_conditions(ex, p, flat);
    CHECK(rep.stationarity_c <= 1e-8);
    CHECK(rep.stationarity_z <= 1e-8);
    CHECK(rep.transversality <= 1e-8);
    CHECK(ex.aT() == doctest::Approx(cf.aT).epsilon(1e-8));
}

TEST_CASE("finite-difference optimality at the extremal") {
    ModelParams p;
    const Extremal ex = solve_extremal(p, quad());
    const GradientCheck g = finite_difference_optimality(ex, p, quad(), 97);
    CHECK(g.coordinates > 100);
    CHECK(g.max_density_c <= 1e-4);
    CHECK(g.max_density_z <= 1e-4);

    // A deliberately wrong path must fail the same check.
    Extremal off = ex;
    for (auto& c : off.c) c *= 1.05;
    CHECK(finite_difference_optimality(off, p, quad(), 97).max_density_c > 1e-3);
}

TEST_CASE("equations of variation match finite differences") {
    ModelParams p;
    const auto w = WageProfile::quadratic();
    const CauchySystem sys(p, w, 1.5, 4096);
    const double x = 0.3, y = 0.2, e = 1e-6;
    const SegmentState s = sys.propagate(100, 3000, x, y);
    const SegmentState px = sys.propagate(100, 3000, x + e, y), mx = sys.propagate(100, 3000, x - e, y);
    const SegmentState py = sys.propagate(100, 3000, x, y + e), my = sys.propagate(100, 3000, x, y - e);
    CHECK(s.dx_dx == doctest::Approx((px.x - mx.x) / (2 * e)).epsilon(1e-6));
    CHECK(s.dy_dx == doctest::Approx((px.y - mx.y) / (2 * e)).epsilon(1e-6));
    CHECK(s.dx_dy == doctest::Approx((py.x - my.x) / (2 * e)).epsilon(1e-6));
    CHECK(s.dy_dy == doctest::Approx((py.y - my.y) / (2 * e)).epsilon(1e-6));

    const Path path = sys.integrate(y);
    const SegmentState whole = sys.propagate(0, sys.steps(), p.x0, y);
    CHECK(whole.x == path.x.back());
    CHECK(whole.y == path.y.back());
}

TEST_CASE("segmented integration restarts at the given nodes") {
    ModelParams p;
    const auto w = WageProfile::quadratic();
    const CauchySystem sys(p, w, 1.5, 1024);
    const Path single = sys.integrate(0.9);
    const std::vector<int> nodes{0, 400};
    const std::vector<double> xs{p.x0, single.x[400]}, ys{0.9, single.y[400]};
    const Path split = sys.integrate_segments(nodes, xs, ys);
    for (std::size_t i = 0; i < single.x.size(); ++i) CHECK(split.x[i] == single.x[i]);
    CHECK_THROWS_AS(sys.integrate_segments(std::vector<int>{1}, std::vector<double>{0.0}, std::vector<double>{0.0}),
                    InvalidArgument);
}
