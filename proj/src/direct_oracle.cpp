#include "reloc/direct_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "reloc/log.hpp"
#include "reloc/quadrature.hpp"

namespace reloc {

void OracleConfig::validate() const {
    if (intervals < 1 || intervals > 512) throw InvalidArgument("oracle intervals ∈ [1, 512]");
    if (max_iterations < 1) throw InvalidArgument("oracle max_iterations >= 1");
    if (!(gradient_tol > 0.0)) throw InvalidArgument("oracle gradient_tol > 0");
    if (resolution < 2) throw InvalidArgument("oracle resolution >= 2");
    if (penalty_rounds < 1) throw InvalidArgument("oracle penalty_rounds >= 1");
    if (!(penalty_initial > 0.0)) throw InvalidArgument("oracle penalty_initial > 0");
}

double terminal_asset_floor(const ModelParams& params) {
    if (params.a0 > 0.0) return 1e-6 * params.a0 * std::exp(params.r * params.T);
    return 1e-8;
}

Simulator::Simulator(const ModelParams& params, const WageProfile& profile, int intervals, int resolution)
    : params_(params), profile_(profile), n_(intervals) {
    params_.validate();
    if (intervals < 1) throw InvalidArgument("simulate needs at least one interval");
    // Even substep count per interval, so equal totals give identical lattices.
    m_ = std::max(2, (resolution + intervals - 1) / intervals);
    if (m_ % 2) ++m_;
    dt_ = params_.T / (static_cast<double>(n_) * m_);
    floor_ = terminal_asset_floor(params_);
    const std::size_t total = static_cast<std::size_t>(n_) * m_;
    disc_rho_.resize(total + 1);
    for (std::size_t i = 0; i <= total; ++i) disc_rho_[i] = std::exp(-params_.rho * dt_ * static_cast<double>(i));
}

Simulator::Raw Simulator::integrate(const std::vector<double>& c, const std::vector<double>& z,
                                    std::vector<double>* x_out) const {
    if (c.size() != static_cast<std::size_t>(n_) || z.size() != static_cast<std::size_t>(n_))
        throw InvalidArgument("control vectors must have one entry per interval");
    const double r = params_.r, theta = params_.theta;
    double x = params_.x0;
    double a = params_.a0;
    double running = 0.0;
    if (x_out) x_out->assign(1, x);
    for (int k = 0; k < n_; ++k) {
        const double ck = c[k], zk = z[k];
        if (!(ck >= 0.0)) throw InvalidArgument("consumption must be nonnegative");
        const double outflow = params_.p * ck + params_.xi * zk * zk;
        const double u = std::pow(ck, 1.0 - theta) / (1.0 - theta) - params_.eta * zk * zk;
        const std::size_t base = static_cast<std::size_t>(k) * m_;
        // Simpson on the interval's substeps for the discounted running utility.
        double s = disc_rho_[base] + disc_rho_[base + m_];
        for (int j = 1; j < m_; ++j) s += (j % 2 ? 4.0 : 2.0) * disc_rho_[base + j];
        running += u * s * dt_ / 3.0;

        double w0 = profile_.at(x).w;
        for (int j = 0; j < m_; ++j) {
            const double xs = x + zk * dt_ * j;
            const double wm = profile_.at(xs + 0.5 * zk * dt_).w;
            const double w1 = profile_.at(xs + zk * dt_).w;
            const double k1 = r * a + w0 - outflow;
            const double k2 = r * (a + 0.5 * dt_ * k1) + wm - outflow;
            const double k3 = r * (a + 0.5 * dt_ * k2) + wm - outflow;
            const double k4 = r * (a + dt_ * k3) + w1 - outflow;
            a += dt_ / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            w0 = w1;
        }
        x += zk * dt_ * m_;
        if (x_out) x_out->push_back(x);
    }
    return {running, a, x};
}

SimulationResult Simulator::run(const std::vector<double>& c, const std::vector<double>& z) const {
    SimulationResult out;
    const Raw raw = integrate(c, z, &out.x);
    out.aT = raw.aT;
    out.XT = raw.XT;
    out.feasible = raw.aT > 0.0;
    const double bequest_at = out.feasible ? raw.aT : floor_;
    const double shortfall = std::max(0.0, floor_ - raw.aT);
    out.J = raw.running +
            std::exp(-params_.rho * params_.T) * std::pow(bequest_at, 1.0 - params_.theta) / (1.0 - params_.theta) -
            shortfall * shortfall;
    return out;
}

double Simulator::penalized(const std::vector<double>& c, const std::vector<double>& z, double weight) const {
    const Raw raw = integrate(c, z, nullptr);
    const double shortfall = std::max(0.0, floor_ - raw.aT);
    return raw.running +
           std::exp(-params_.rho * params_.T) * std::pow(std::max(raw.aT, floor_), 1.0 - params_.theta) /
               (1.0 - params_.theta) -
           weight * shortfall * shortfall;
}

SimulationResult simulate(const ModelParams& params, const WageProfile& profile, const std::vector<double>& c,
                          const std::vector<double>& z, int resolution) {
    if (c.empty()) throw InvalidArgument("simulate needs at least one interval");
    return Simulator(params, profile, static_cast<int>(c.size()), resolution).run(c, z);
}

std::pair<std::vector<double>, std::vector<double>> sample_controls(const Extremal& extremal, int intervals) {
    const Path& path = extremal.path;
    if (intervals < 1 || path.t.size() < 3) throw InvalidArgument("sample_controls needs a populated extremal");
    const double T = path.t.back();
    const double h = path.h;
    const std::vector<double> cum_c = cumulative_integral(extremal.c, h);
    auto interp = [&](const std::vector<double>& v, double t) {
        const double pos = std::clamp(t / h, 0.0, static_cast<double>(v.size() - 1));
        const std::size_t i = std::min(static_cast<std::size_t>(pos), v.size() - 2);
        const double f = pos - static_cast<double>(i);
        return v[i] + f * (v[i + 1] - v[i]);
    };
    std::vector<double> c(intervals), z(intervals);
    const double delta = T / intervals;
    for (int k = 0; k < intervals; ++k) {
        const double lo = delta * k, hi = delta * (k + 1);
        c[k] = (interp(cum_c, hi) - interp(cum_c, lo)) / delta;
        // The average speed reproduces x exactly at the interval boundaries.
        z[k] = (interp(path.x, hi) - interp(path.x, lo)) / delta;
    }
    return {c, z};
}

double trajectory_distance(const DirectSolution& direct, const Extremal& extremal) {
    const Path& path = extremal.path;
    const double T = path.t.back();
    const double delta = T / direct.N;
    double worst = 0.0;
    for (std::size_t i = 0; i < path.t.size(); ++i) {
        const double t = path.t[i];
        const int k = std::min(direct.N - 1, static_cast<int>(t / delta));
        const double x = direct.x[k] + direct.z[k] * (t - delta * k);
        worst = std::max(worst, std::abs(x - path.x[i]));
    }
    return worst;
}

namespace {

struct Bounds {
    double c_lo, c_hi, z_hi;
};

// Controls stacked as v = (c_0..c_{N-1}, z_0..z_{N-1}).
class Ascent {
public:
    Ascent(const Simulator& sim, const Bounds& bounds, const OracleConfig& config)
        : sim_(sim), b_(bounds), cfg_(config), n_(sim.intervals()), c_(n_), z_(n_) {}

    double value(const std::vector<double>& v, double weight) {
        std::copy(v.begin(), v.begin() + n_, c_.begin());
        std::copy(v.begin() + n_, v.end(), z_.begin());
        return sim_.penalized(c_, z_, weight);
    }

    void project(std::vector<double>& v) const {
        for (int i = 0; i < n_; ++i) v[i] = std::clamp(v[i], b_.c_lo, b_.c_hi);
        for (int i = n_; i < 2 * n_; ++i) v[i] = std::clamp(v[i], -b_.z_hi, b_.z_hi);
    }

    std::vector<double> gradient(std::vector<double> v, double weight) {
        std::vector<double> g(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double vi = v[i];
            double d = 1e-6 * std::max(std::abs(vi), i < static_cast<std::size_t>(n_) ? 1e-3 : 1e-2);
            if (i < static_cast<std::size_t>(n_)) d = std::min(d, 0.5 * vi);
            v[i] = vi + d;
            const double up = value(v, weight);
            v[i] = vi - d;
            const double down = value(v, weight);
            v[i] = vi;
            g[i] = (up - down) / (2.0 * d);
        }
        return g;
    }

    double projected_norm(const std::vector<double>& v, const std::vector<double>& g) const {
        std::vector<double> moved(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) moved[i] = v[i] + g[i];
        project(moved);
        double worst = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(moved[i] - v[i]));
        return worst;
    }

    // One penalty round; returns iterations used.
    int maximize(std::vector<double>& v, double weight, double& pg_out) {
        project(v);
        double f = value(v, weight);
        std::vector<double> g = gradient(v, weight);
        double step = 1.0;
        std::vector<double> trial(v.size());
        int stalls = 0;
        for (int it = 0; it < cfg_.max_iterations; ++it) {
            pg_out = projected_norm(v, g);
            if (pg_out <= cfg_.gradient_tol) return it;
            double alpha = step;
            double f_new = f;
            bool accepted = false;
            for (int halving = 0; halving < 60; ++halving) {
                for (std::size_t i = 0; i < v.size(); ++i) trial[i] = v[i] + alpha * g[i];
                project(trial);
                double gain = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) gain += g[i] * (trial[i] - v[i]);
                f_new = value(trial, weight);
                if (f_new >= f + 1e-4 * gain) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) return it;  // step collapse
            std::vector<double> g_new = gradient(trial, weight);
            // Barzilai–Borwein step for the next iteration (ascent sign convention).
            double ss = 0.0, sy = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double s = trial[i] - v[i];
                const double y = g[i] - g_new[i];
                ss += s * s;
                sy += s * y;
            }
            step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : std::min(2.0 * alpha, 1e10);
            stalls = (f_new - f <= 1e-15 * std::max(1.0, std::abs(f))) ? stalls + 1 : 0;
            v.swap(trial);
            g.swap(g_new);
            f = f_new;
            if (stalls >= 10) {
                pg_out = projected_norm(v, g);
                return it + 1;
            }
        }
        pg_out = projected_norm(v, g);
        return cfg_.max_iterations;
    }

private:
    const Simulator& sim_;
    Bounds b_;
    const OracleConfig& cfg_;
    int n_;
    std::vector<double> c_, z_;
};

}  // namespace

DirectSolution direct_optimize(const ModelParams& params, const WageProfile& profile, const OracleConfig& config,
                               const Extremal* warm_start) {
    params.validate();
    config.validate();
    const int N = config.intervals;
    const Simulator sim(params, profile, N, config.resolution);

    double fallback_z = 0.0;
    if (params.xi == 0.0) {
        double zmax = 0.0;
        if (warm_start)
            for (double v : warm_start->z) zmax = std::max(zmax, std::abs(v));
        fallback_z = std::max(2.0 * zmax, 1.0);
    }
    const ControlCaps caps = compute_control_caps(params, profile, fallback_z);
    const Bounds bounds{1e-9 * caps.C, caps.C, caps.Z};

    const double W0 = profile.at(params.x0).w;
    double c0 = (W0 + 0.5 * params.a0 * params.r / -std::expm1(-params.r * params.T)) / params.p;
    if (!(c0 > 0.0)) c0 = 1e-3 * caps.C;
    c0 = std::clamp(c0, bounds.c_lo, 0.5 * caps.C);

    std::vector<std::vector<double>> starts;
    std::vector<int> start_ids;
    {
        std::vector<double> v(2 * N, 0.0);
        std::fill(v.begin(), v.begin() + N, c0);
        starts.push_back(v);
        start_ids.push_back(0);
    }
    if (warm_start) {
        auto [c, z] = sample_controls(*warm_start, N);
        std::vector<double> v(c);
        v.insert(v.end(), z.begin(), z.end());
        starts.push_back(v);
        start_ids.push_back(1);
    }
    {
        std::mt19937_64 rng(config.seed);
        std::uniform_real_distribution<double> scale(0.5, 1.5), speed(-1.0, 1.0);
        const double zs = std::min(0.05, 0.5 * caps.Z);
        std::vector<double> v(2 * N);
        for (int i = 0; i < N; ++i) v[i] = c0 * scale(rng);
        for (int i = N; i < 2 * N; ++i) v[i] = zs * speed(rng);
        starts.push_back(v);
        start_ids.push_back(2);
    }

    DirectSolution best;
    best.N = N;
    best.seed = config.seed;
    best.caps = caps;
    best.J = -std::numeric_limits<double>::infinity();
    bool any_feasible = false;
    const double floor = terminal_asset_floor(params);
    Ascent ascent(sim, bounds, config);

    for (std::size_t s = 0; s < starts.size(); ++s) {
        std::vector<double> v = starts[s];
        int iterations = 0;
        double pg = 0.0;
        double weight = config.penalty_initial;
        for (int round = 0; round < config.penalty_rounds; ++round, weight *= 10.0)
            iterations += ascent.maximize(v, weight, pg);
        std::vector<double> c(v.begin(), v.begin() + N), z(v.begin() + N, v.end());
        const SimulationResult res = sim.run(c, z);
        const bool feasible = res.aT >= floor * (1.0 - 1e-9);
        best.start_J.push_back(feasible ? res.J : std::nan(""));
        log_debug([&] {
            return "oracle start " + std::to_string(start_ids[s]) + ": J=" + std::to_string(res.J) +
                   " iterations=" + std::to_string(iterations) + " pg=" + std::to_string(pg);
        });
        if (!feasible) continue;
        any_feasible = true;
        if (res.J > best.J) {
            best.c = std::move(c);
            best.z = std::move(z);
            best.x = res.x;
            best.J = res.J;
            best.aT = res.aT;
            best.iterations = iterations;
            best.best_start = start_ids[s];
            best.projected_gradient = pg;
        }
    }
    if (!any_feasible) throw InfeasibleTerminalAssets("every oracle start ended with a(T) below the floor");
    return best;
}

}  // namespace reloc
