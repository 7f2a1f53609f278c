#include "reloc/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "reloc/log.hpp"

namespace reloc {

namespace {

// (1 - e^{-sT}) / s, continuous through s = 0.
double decay_integral(double s, double T) {
    if (std::abs(s * T) < 1e-12) return T;
    return -std::expm1(-s * T) / s;
}

}  // namespace

double ConstantWageSolution::consumption(double t) const { return c0 * std::exp(growth * t); }

double discounted_consumption_profile(const ModelParams& params) {
    const double k = (params.rho - params.r) / params.theta;
    return std::exp(k * params.T) * decay_integral(k + params.r, params.T);
}

ConstantWageSolution closed_form_constant_wage(const ModelParams& params, double W) {
    params.validate();
    const double T = params.T, theta = params.theta;
    const double Q = discounted_consumption_profile(params);
    const double denom = 1.0 + std::exp(params.r * T) * std::pow(params.p, (theta - 1.0) / theta) * Q;
    if (!(denom > 0.0)) throw Error("closed-form denominator not positive");
    ConstantWageSolution out;
    out.aT = std::exp(params.r * T) * (params.a0 + W * decay_integral(params.r, T)) / denom;
    const double k = (params.rho - params.r) / theta;
    out.c0 = std::pow(params.p, -1.0 / theta) * out.aT * std::exp(k * T);
    out.growth = -k;
    if (out.aT > 0.0) {
        // Running utility decays at rate -s = ρ - (1-θ)(r-ρ)/θ.
        const double s = -params.rho + (1.0 - theta) * out.growth;
        out.J = std::pow(out.c0, 1.0 - theta) / (1.0 - theta) * decay_integral(-s, T) +
                std::exp(-params.rho * T) * std::pow(out.aT, 1.0 - theta) / (1.0 - theta);
        out.lambda1 = std::exp((params.r - params.rho) * T) * std::pow(out.aT, -theta);
    } else {
        out.J = std::nan("");
        out.lambda1 = std::nan("");
    }
    return out;
}

std::vector<double> horizon_grid(double lo, double hi, int count) {
    if (count < 1) throw InvalidArgument("horizon count >= 1");
    if (count == 1) return {lo};
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
    out.back() = hi;
    return out;
}

std::vector<SweepRecord> sweep_horizon(const ModelParams& base, const WageProfile& profile,
                                       const std::vector<double>& horizons, const ShootConfig& config, int jobs) {
    for (std::size_t i = 1; i < horizons.size(); ++i)
        if (!(horizons[i] > horizons[i - 1])) throw InvalidArgument("sweep horizons must be increasing");
    std::vector<SweepRecord> records(horizons.size());
    const bool left_of_peak = profile.family() != WageFamily::constant && base.x0 < profile.peak_location();

    auto solve_one = [&](std::size_t i) {
        SweepRecord& rec = records[i];
        ModelParams params = base;
        params.T = horizons[i];
        rec.T = params.T;
        rec.regime = classify_regime(params).tag;
        try {
            SolveResult result = solve_extremal_traced(params, profile, config);
            const Extremal& ex = result.extremal;
            rec.converged = result.converged && ex.violations.empty();
            if (!result.trace.empty() && !ex.a.empty()) {
                rec.aT = ex.aT();
                rec.lambda1 = ex.lambda1;
                rec.XT = ex.XT();
                rec.J = ex.J;
                for (std::size_t k = 0; k < ex.path.x.size(); ++k) {
                    if (ex.path.x[k] < 0.0 || ex.path.x[k] > 1.0) rec.confined = false;
                    if (left_of_peak && k > 0 && !(ex.path.x[k] > ex.path.x[k - 1]) &&
                        profile.peak_location() - ex.path.x[k - 1] > kPeakResolution)
                        rec.monotone = false;
                }
            }
            if (!result.converged) rec.note = "outer solve did not converge";
            else if (!ex.violations.empty()) rec.note = ex.violations.front();
            if (left_of_peak && rec.converged && !(rec.XT < profile.peak_location() + kPeakResolution)) {
                rec.converged = false;
                rec.note = "terminal location not left of the wage peak";
            }
        } catch (const Error& e) {
            rec.converged = false;
            rec.note = e.what();
        }
        if (!rec.converged) log_info("sweep T=" + std::to_string(rec.T) + " failed: " + rec.note);
    };

    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(horizons.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < horizons.size(); ++i) solve_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (int j = 0; j < jobs; ++j)
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < horizons.size(); i = next++) solve_one(i);
            });
        for (auto& w : workers) w.join();
    }
    return records;
}

GrowthFit fit_growth_rate(const std::vector<SweepRecord>& records, SweepField field, bool remove_log_correction) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& rec : records) {
        if (!rec.converged) continue;
        const double v = field == SweepField::aT ? rec.aT : field == SweepField::lambda1 ? rec.lambda1 : rec.XT;
        if (!(v > 0.0)) throw InvalidArgument("growth fit needs positive field values");
        pts.emplace_back(rec.T, std::log(v) + (remove_log_correction ? std::log1p(rec.T) : 0.0));
    }
    if (pts.size() < 4) throw InvalidArgument("growth fit needs at least 4 converged records");
    std::sort(pts.begin(), pts.end());
    pts.erase(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(pts.size() / 2));

    const double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0;
    for (auto [x, y] : pts) sx += x, sy += y;
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (auto [x, y] : pts) sxx += (x - mx) * (x - mx), sxy += (x - mx) * (y - my);
    GrowthFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (auto [x, y] : pts) fit.residual = std::max(fit.residual, std::abs(fit.intercept + fit.slope * x - y));
    fit.window_lo = pts.front().first;
    fit.window_hi = pts.back().first;
    fit.points = static_cast<int>(pts.size());
    return fit;
}

double stalling_bound(const ModelParams& params, const WageProfile& profile, double lambda1) {
    const Regime regime = classify_regime(params);
    if (!(regime.tag == RegimeTag::Positive && regime.subcase == PositiveSubcase::below_r))
        throw InvalidArgument("stalling bound applies only for rho ∈ (r(1-theta), r)");
    if (!(params.eta > 0.0)) throw InvalidArgument("stalling bound needs eta > 0");
    return params.x0 + lambda1 * profile.at(params.x0).dw /
                           (2.0 * params.rho * (params.r - params.rho) * params.eta);
}

PeakGapReport peak_gap_report(const ModelParams& params, const WageProfile& profile,
                              const std::vector<SweepRecord>& records) {
    if (profile.family() == WageFamily::constant) throw InvalidArgument("peak report needs a single-peak wage");
    PeakGapReport rep;
    const Regime regime = classify_regime(params);
    rep.regime = regime.tag;
    rep.subcase = regime.subcase;
    rep.peak = profile.peak_location();
    rep.bound_applies = regime.tag == RegimeTag::Positive && regime.subcase == PositiveSubcase::below_r;

    std::vector<const SweepRecord*> ok;
    for (const auto& rec : records)
        if (rec.converged) ok.push_back(&rec);
    for (const auto* rec : ok) rep.gaps.push_back(rep.peak - rec->XT);
    if (!ok.empty()) rep.limit_estimate = ok.back()->XT;
    rep.gap_shrinking = ok.size() >= 2;
    for (std::size_t i = 1; i < rep.gaps.size(); ++i)
        if (!(rep.gaps[i] < rep.gaps[i - 1] || std::abs(rep.gaps[i]) <= kPeakResolution)) rep.gap_shrinking = false;

    if (rep.bound_applies) {
        rep.within_bound = !ok.empty();
        rep.bound_below_peak = !ok.empty();
        for (const auto* rec : ok) {
            ModelParams at_T = params;
            at_T.T = rec->T;
            const double bound = stalling_bound(at_T, profile, rec->lambda1);
            rep.bounds.push_back(bound);
            if (!(rec->XT <= bound)) rep.within_bound = false;
            if (!(bound < rep.peak)) rep.bound_below_peak = false;
        }
    }
    return rep;
}

}  // namespace reloc
