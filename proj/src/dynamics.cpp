#include "reloc/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "reloc/quadrature.hpp"

namespace reloc {

namespace {

double utility(double v, double theta) { return std::pow(v, 1.0 - theta) / (1.0 - theta); }

std::string describe(const char* what, double value) {
    std::ostringstream os;
    os.precision(10);
    os << what << " (" << value << ")";
    return os.str();
}

void require_aligned(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
    if (a.size() != b.size() || a.size() != c.size()) throw InvalidArgument("control/state sample grids are misaligned");
}

}  // namespace

int default_steps(double T) {
    const double raw = std::ceil(2048.0 * std::max(T, 1.0));
    int n = static_cast<int>(std::min(raw, static_cast<double>(1 << 20)));
    if (n % 2) ++n;
    return n;
}

double denominator_floor(const ModelParams& params, double lambda1) {
    return 1e-12 * std::max(params.xi * lambda1, params.eta);
}

double relocation_denominator(double t, double lambda1, const ModelParams& params) {
    return 2.0 * (params.xi * lambda1 * std::exp(-params.r * t) + params.eta * std::exp(-params.rho * t));
}

std::pair<double, double> rhs_cauchy(double t, double x, double y, double lambda1, const ModelParams& params,
                                     const WageProfile& profile) {
    const double F = relocation_denominator(t, lambda1, params);
    if (!(F >= denominator_floor(params, lambda1)) || F <= 0.0)
        throw SingularDenominator(describe("relocation denominator below floor", F));
    return {y / F, -profile.at(x).dw * lambda1 * std::exp(-params.r * t)};
}

CauchySystem::CauchySystem(const ModelParams& params, const WageProfile& profile, double lambda1, int n_steps)
    : params_(params), profile_(profile), lambda1_(lambda1), n_(n_steps), h_(params.T / n_steps) {
    if (n_steps < 16) throw InvalidArgument("integration needs at least 16 steps");
    if (!(lambda1 > 0.0) || !std::isfinite(lambda1)) throw InvalidArgument("lambda1 > 0");
    const double floor = denominator_floor(params, lambda1);
    inv_f_.resize(2 * static_cast<std::size_t>(n_) + 1);
    forcing_.resize(inv_f_.size());
    for (std::size_t k = 0; k < inv_f_.size(); ++k) {
        const double t = 0.5 * h_ * static_cast<double>(k);
        const double F = relocation_denominator(t, lambda1, params);
        if (!(F >= floor) || F <= 0.0) throw SingularDenominator(describe("relocation denominator below floor", F));
        inv_f_[k] = 1.0 / F;
        forcing_[k] = lambda1 * std::exp(-params.r * t);
    }
}

template <typename Sink>
void CauchySystem::run(int i0, int i1, double x, double y, Sink&& sink) const {
    sink(i0, x, y);
    const double h = h_;
    for (int i = i0; i < i1; ++i) {
        const std::size_t k = 2 * static_cast<std::size_t>(i);
        const double k1x = y * inv_f_[k];
        const double k1y = -profile_.at(x).dw * forcing_[k];
        const double x2 = x + 0.5 * h * k1x, y2 = y + 0.5 * h * k1y;
        const double k2x = y2 * inv_f_[k + 1];
        const double k2y = -profile_.at(x2).dw * forcing_[k + 1];
        const double x3 = x + 0.5 * h * k2x, y3 = y + 0.5 * h * k2y;
        const double k3x = y3 * inv_f_[k + 1];
        const double k3y = -profile_.at(x3).dw * forcing_[k + 1];
        const double x4 = x + h * k3x, y4 = y + h * k3y;
        const double k4x = y4 * inv_f_[k + 2];
        const double k4y = -profile_.at(x4).dw * forcing_[k + 2];
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        if (!std::isfinite(x) || !std::isfinite(y)) throw Divergence("non-finite state in Cauchy integration");
        sink(i + 1, x, y);
    }
}

Path CauchySystem::integrate(double alpha) const {
    const int nodes[] = {0};
    const double xs[] = {params_.x0}, ys[] = {alpha};
    return integrate_segments(nodes, xs, ys);
}

Path CauchySystem::integrate_segments(std::span<const int> nodes, std::span<const double> xs,
                                      std::span<const double> ys) const {
    if (nodes.empty() || nodes[0] != 0 || xs.size() != nodes.size() || ys.size() != nodes.size())
        throw InvalidArgument("segments must start at node 0 with one state per node");
    Path path;
    path.h = h_;
    path.t = uniform_grid(params_.T, n_);
    path.x.resize(path.t.size());
    path.y.resize(path.t.size());
    auto store = [&](int i, double x, double y) {
        path.x[i] = x;
        path.y[i] = y;
    };
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const int end = k + 1 < nodes.size() ? nodes[k + 1] : n_;
        if (end <= nodes[k]) throw InvalidArgument("segment nodes must be strictly increasing and below n");
        run(nodes[k], end, xs[k], ys[k], store);
    }
    return path;
}

SegmentState CauchySystem::propagate(int i0, int i1, double x, double y) const {
    if (i0 < 0 || i1 > n_ || i0 > i1) throw InvalidArgument("propagate: index range outside the grid");
    // RK4 on the state together with its equations of variation
    //   d/dt Φ = [[0, 1/F], [-λ₁e^{-rt} w''(x), 0]] Φ,   Φ(t0) = I.
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;  // Φ = [[a, b], [c, d]]
    const double h = h_;
    for (int i = i0; i < i1; ++i) {
        const std::size_t k = 2 * static_cast<std::size_t>(i);
        auto slope = [&](std::size_t j, double xs, double ys, double as, double bs, double cs, double ds) {
            const auto wv = profile_.at(xs);
            const double q = -wv.d2w * forcing_[j];
            return std::array<double, 6>{ys * inv_f_[j], -wv.dw * forcing_[j], cs * inv_f_[j], ds * inv_f_[j],
                                         q * as, q * bs};
        };
        const auto k1 = slope(k, x, y, a, b, c, d);
        const auto k2 = slope(k + 1, x + 0.5 * h * k1[0], y + 0.5 * h * k1[1], a + 0.5 * h * k1[2],
                              b + 0.5 * h * k1[3], c + 0.5 * h * k1[4], d + 0.5 * h * k1[5]);
        const auto k3 = slope(k + 1, x + 0.5 * h * k2[0], y + 0.5 * h * k2[1], a + 0.5 * h * k2[2],
                              b + 0.5 * h * k2[3], c + 0.5 * h * k2[4], d + 0.5 * h * k2[5]);
        const auto k4 = slope(k + 2, x + h * k3[0], y + h * k3[1], a + h * k3[2], b + h * k3[3], c + h * k3[4],
                              d + h * k3[5]);
        auto step = [&](int j) { return h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]); };
        x += step(0);
        y += step(1);
        a += step(2);
        b += step(3);
        c += step(4);
        d += step(5);
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(a) || !std::isfinite(d))
            throw Divergence("non-finite state in variational integration");
    }
    return {x, y, a, b, c, d};
}

std::pair<double, double> CauchySystem::terminal(double alpha) const {
    double xT = 0.0, yT = 0.0;
    run(0, n_, params_.x0, alpha, [&](int, double x, double y) {
        xT = x;
        yT = y;
    });
    return {xT, yT};
}

Path integrate_cauchy(const ModelParams& params, const WageProfile& profile, double lambda1, double alpha,
                      int n_steps) {
    return CauchySystem(params, profile, lambda1, n_steps).integrate(alpha);
}

double consumption_rule(double lambda1, double t, const ModelParams& params) {
    if (!(lambda1 > 0.0)) throw InvalidArgument("lambda1 > 0");
    return std::pow(1.0 / (params.p * lambda1), 1.0 / params.theta) *
           std::exp((params.r - params.rho) / params.theta * t);
}

double relocation_rule(double y, double t, double lambda1, const ModelParams& params) {
    const double F = relocation_denominator(t, lambda1, params);
    if (!(F >= denominator_floor(params, lambda1)) || F <= 0.0)
        throw SingularDenominator(describe("relocation denominator below floor", F));
    return y / F;
}

std::vector<double> integrate_assets(const ModelParams& params, const WageProfile& profile,
                                     std::span<const double> x, std::span<const double> c,
                                     std::span<const double> z, double h) {
    require_aligned(x, c, z);
    const std::size_t m = x.size();
    std::vector<double> integrand(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double t = h * static_cast<double>(i);
        integrand[i] = (profile.at(x[i]).w - params.p * c[i] - params.xi * z[i] * z[i]) * std::exp(-params.r * t);
    }
    const std::vector<double> cumulative = cumulative_integral(integrand, h);
    std::vector<double> a(m);
    for (std::size_t i = 0; i < m; ++i)
        a[i] = std::exp(params.r * h * static_cast<double>(i)) * (params.a0 + cumulative[i]);
    if ((m - 1) % 2 == 0)  // composite Simpson for the endpoint
        a[m - 1] = std::exp(params.r * h * static_cast<double>(m - 1)) * (params.a0 + simpson(integrand, h));
    return a;
}

double integrate_assets_rk4(const ModelParams& params, const WageProfile& profile, std::span<const double> x,
                            std::span<const double> c, std::span<const double> z, double h) {
    require_aligned(x, c, z);
    if ((x.size() - 1) % 2 != 0) throw InvalidArgument("asset RK4 cross-check needs an even number of intervals");
    auto source = [&](std::size_t i) {
        return profile.at(x[i]).w - params.p * c[i] - params.xi * z[i] * z[i];
    };
    const double H = 2.0 * h;
    double a = params.a0;
    for (std::size_t i = 0; i + 2 < x.size(); i += 2) {
        const double f0 = source(i), f1 = source(i + 1), f2 = source(i + 2);
        const double k1 = params.r * a + f0;
        const double k2 = params.r * (a + 0.5 * H * k1) + f1;
        const double k3 = params.r * (a + 0.5 * H * k2) + f1;
        const double k4 = params.r * (a + H * k3) + f2;
        a += H / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return a;
}

double objective_eval(const ModelParams& params, std::span<const double> c, std::span<const double> z, double aT,
                      double h) {
    if (!(aT > 0.0)) throw InfeasibleTerminalAssets(describe("bequest utility undefined for a(T) <= 0", aT));
    if (c.size() != z.size()) throw InvalidArgument("control sample grids are misaligned");
    std::vector<double> running(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double t = h * static_cast<double>(i);
        running[i] = std::exp(-params.rho * t) * (utility(c[i], params.theta) - params.eta * z[i] * z[i]);
    }
    const double T = h * static_cast<double>(c.size() - 1);
    return simpson(running, h) + std::exp(-params.rho * T) * utility(aT, params.theta);
}

double lambda1_from_aT(double aT, const ModelParams& params) {
    if (!(aT > 0.0)) throw InfeasibleTerminalAssets(describe("multiplier undefined for a(T) <= 0", aT));
    return std::exp((params.r - params.rho) * params.T) * std::pow(aT, -params.theta);
}

double aT_from_lambda1(double lambda1, const ModelParams& params) {
    return std::pow(std::exp((params.r - params.rho) * params.T) / lambda1, 1.0 / params.theta);
}

Extremal assemble_extremal(const ModelParams& params, const WageProfile& profile, double lambda1, double alpha,
                           Path path) {
    Extremal ex;
    ex.alpha = alpha;
    ex.lambda1 = lambda1;
    ex.path = std::move(path);
    const std::size_t m = ex.path.t.size();
    ex.c.resize(m);
    ex.z.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double t = ex.path.t[i];
        ex.c[i] = consumption_rule(lambda1, t, params);
        ex.z[i] = relocation_rule(ex.path.y[i], t, lambda1, params);
    }
    ex.a = integrate_assets(params, profile, ex.path.x, ex.c, ex.z, ex.path.h);
    if (ex.a.back() > 0.0) ex.J = objective_eval(params, ex.c, ex.z, ex.a.back(), ex.path.h);
    return ex;
}

std::vector<std::string> check_extremal(const Extremal& ex, const ModelParams& params, double alpha_tol) {
    std::vector<std::string> out;
    const double yT = std::abs(ex.path.y.back());
    if (yT > alpha_tol * std::max(1.0, std::abs(ex.alpha))) out.push_back(describe("|y(T)| above shooting tolerance", yT));
    if (ex.a.front() != params.a0) out.push_back("a(0) differs from a0");
    if (!(ex.aT() > 0.0)) out.push_back(describe("a(T) not positive", ex.aT()));
    for (std::size_t i = 0; i < ex.c.size(); ++i) {
        if (!(ex.c[i] > 0.0 && ex.c[i] < ex.caps.C)) {
            out.push_back(describe("consumption outside (0, C) at t", ex.path.t[i]));
            break;
        }
    }
    for (std::size_t i = 0; i < ex.z.size(); ++i) {
        if (!(std::abs(ex.z[i]) < ex.caps.Z)) {
            out.push_back(describe("speed cap violated at t", ex.path.t[i]));
            break;
        }
    }
    for (std::size_t i = 0; i < ex.path.x.size(); ++i) {
        if (ex.path.x[i] < 0.0 || ex.path.x[i] > 1.0) {
            out.push_back(describe("location left [0,1] at t", ex.path.t[i]));
            break;
        }
    }
    return out;
}

bool ResidualReport::passes(double tol) const {
    return stationarity_c <= tol && stationarity_z <= tol && transversality <= tol && costate_ode <= tol &&
           confinement <= tol && positivity > 0.0;
}

ResidualReport verify_necessary_conditions(const Extremal& ex, const ModelParams& params,
                                           const WageProfile& profile) {
    ResidualReport rep;
    const auto& t = ex.path.t;
    const auto& x = ex.path.x;
    const auto& y = ex.path.y;
    const double lambda1 = ex.lambda1;
    const std::size_t m = t.size();
    for (std::size_t i = 0; i < m; ++i) {
        const double p1 = lambda1 * std::exp(-params.r * t[i]);
        const double disc = std::exp(-params.rho * t[i]);
        const double marginal_utility = disc * std::pow(ex.c[i], -params.theta);
        const double hc = -params.p * p1 + marginal_utility;
        rep.stationarity_c =
            std::max(rep.stationarity_c, std::abs(hc) / std::max({1.0, params.p * p1, marginal_utility}));

        const double cost = 2.0 * (params.xi * p1 + params.eta * disc) * ex.z[i];
        const double hz = y[i] - cost;
        rep.stationarity_z = std::max(rep.stationarity_z, std::abs(hz) / std::max({1.0, std::abs(y[i]), std::abs(cost)}));

        rep.confinement = std::max({rep.confinement, -x[i], x[i] - 1.0});
    }
    const double h = ex.path.h;
    for (std::size_t i = 2; i + 2 < m; ++i) {
        const double dy = (-y[i + 2] + 8.0 * y[i + 1] - 8.0 * y[i - 1] + y[i - 2]) / (12.0 * h);
        const double rhs = -profile.at(x[i]).dw * lambda1 * std::exp(-params.r * t[i]);
        rep.costate_ode = std::max(rep.costate_ode, std::abs(dy - rhs) / std::max(1.0, std::abs(rhs)));
    }
    rep.transversality = std::abs(y.back());
    rep.positivity = ex.a.back();
    rep.confinement = std::max(0.0, rep.confinement);
    return rep;
}

GradientCheck finite_difference_optimality(const Extremal& ex, const ModelParams& params,
                                           const WageProfile& profile, int stride) {
    const auto& t = ex.path.t;
    const std::size_t m = t.size();
    const std::size_t n = m - 1;
    const double h = ex.path.h;
    const double theta = params.theta;
    std::vector<double> weight(m, h), disc_r(m), disc_rho(m), x(m);
    weight.front() = weight.back() = 0.5 * h;
    for (std::size_t i = 0; i < m; ++i) {
        disc_r[i] = std::exp(-params.r * t[i]);
        disc_rho[i] = std::exp(-params.rho * t[i]);
    }
    x[0] = params.x0;
    for (std::size_t i = 1; i < m; ++i) x[i] = x[i - 1] + 0.5 * h * (ex.z[i - 1] + ex.z[i]);

    // Discounted budget A (a(T) = e^{rT} A) and running utility as node sums.
    double budget = params.a0;
    for (std::size_t i = 0; i < m; ++i)
        budget += weight[i] * (profile.at(x[i]).w - params.p * ex.c[i] - params.xi * ex.z[i] * ex.z[i]) * disc_r[i];
    const double growth = std::exp(params.r * params.T);
    const double bequest_disc = std::exp(-params.rho * params.T);
    const double aT = growth * budget;
    if (!(aT > 0.0)) throw InfeasibleTerminalAssets("a(T) not positive");
    // Change of J for a change of the discounted budget and running utility,
    // formed without cancellation against J itself.
    auto total = [&](double d_budget, double d_running) {
        const double ratio = d_budget / budget;
        if (!(ratio > -1.0)) throw InfeasibleTerminalAssets("perturbed a(T) not positive");
        return d_running + bequest_disc * utility(aT, theta) * std::expm1((1.0 - theta) * std::log1p(ratio));
    };

    GradientCheck out;
    stride = std::max(1, stride);
    // Interior nodes only: at t = 0 and t = T the trapezoid state update makes
    // the discrete gradient differ from the continuous one by O(h).
    for (std::size_t k = 1; k < n; k += static_cast<std::size_t>(stride)) {
        // Consumption coordinate.
        {
            const double c = ex.c[k];
            const double delta = 1e-4 * c;
            double f[2];
            for (int s = 0; s < 2; ++s) {
                const double cs = c + (s ? delta : -delta);
                const double db = -weight[k] * params.p * (cs - c) * disc_r[k];
                const double dr = weight[k] * disc_rho[k] * (utility(cs, theta) - utility(c, theta));
                f[s] = total(db, dr);
            }
            out.max_density_c = std::max(out.max_density_c, std::abs((f[1] - f[0]) / (2.0 * delta)) / weight[k]);
        }
        // Speed coordinate: x shifts on every later node.
        {
            const double z = ex.z[k];
            const double delta = 1e-4 * std::max(1e-2, std::abs(z));
            double f[2];
            for (int s = 0; s < 2; ++s) {
                const double dz = s ? delta : -delta;
                const double zs = z + dz;
                double db = -weight[k] * params.xi * (zs * zs - z * z) * disc_r[k];
                const double dr = -weight[k] * disc_rho[k] * params.eta * (zs * zs - z * z);
                for (std::size_t j = k; j < m; ++j) {
                    double shift;
                    if (j == k)
                        shift = k == 0 ? 0.0 : 0.5 * h * dz;
                    else
                        shift = (k == 0 || k == n) ? 0.5 * h * dz : h * dz;
                    if (shift == 0.0) continue;
                    db += weight[j] * (profile.at(x[j] + shift).w - profile.at(x[j]).w) * disc_r[j];
                }
                f[s] = total(db, dr);
            }
            out.max_density_z = std::max(out.max_density_z, std::abs((f[1] - f[0]) / (2.0 * delta)) / weight[k]);
        }
        ++out.coordinates;
    }
    return out;
}

}  // namespace reloc
