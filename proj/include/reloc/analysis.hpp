#pragma once

// Horizon sweeps and the asymptotic/single-peak checks built on them.

#include <functional>
#include <string>
#include <vector>

#include "reloc/model.hpp"
#include "reloc/shooting.hpp"

namespace reloc {

struct ConstantWageSolution {
    double aT = 0.0;
    double c0 = 0.0;         // c(0)
    double growth = 0.0;     // c(t) = c0 e^{growth t}, growth = (r - ρ)/θ
    double J = 0.0;
    double lambda1 = 0.0;

    double consumption(double t) const;
};

/// ∫_0^T e^{k (T - t)} e^{-r t} dt, k = (ρ - r)/θ, in closed form.
double discounted_consumption_profile(const ModelParams& params);

/// Terminal assets, consumption path and objective for w ≡ W (z ≡ 0).
ConstantWageSolution closed_form_constant_wage(const ModelParams& params, double W);

/// Distance to the wage peak below which a location counts as at the peak: over
/// long horizons the gap decays exponentially and falls under rounding.
constexpr double kPeakResolution = 1e-12;

struct SweepRecord {
    double T = 0.0;
    double aT = 0.0;
    double lambda1 = 0.0;
    double XT = 0.0;
    double J = 0.0;
    RegimeTag regime = RegimeTag::Boundary;
    bool converged = false;
    bool monotone = true;   // x strictly increasing until within kPeakResolution of the peak (x0 < x1 only)
    bool confined = true;   // x ∈ [0,1] on the grid
    std::string note;
};

/// One independent solve per horizon; failures are recorded, not thrown.
/// `jobs` > 1 dispatches horizons to worker threads; record order follows `horizons`.
std::vector<SweepRecord> sweep_horizon(const ModelParams& base, const WageProfile& profile,
                                       const std::vector<double>& horizons, const ShootConfig& config,
                                       int jobs = 1);

/// Horizons {lo, lo + step, ..., hi}.
std::vector<double> horizon_grid(double lo, double hi, int count);

enum class SweepField { aT, lambda1, XT };

struct GrowthFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // max |fit - data| in log units
    double window_lo = 0.0;
    double window_hi = 0.0;
    int points = 0;
};

/// Least squares of log(field) on T over the larger-T half of the converged
/// records. With `remove_log_correction`, log(1 + T) is added to the data first.
GrowthFit fit_growth_rate(const std::vector<SweepRecord>& records, SweepField field,
                          bool remove_log_correction = false);

struct PeakGapReport {
    RegimeTag regime = RegimeTag::Boundary;
    PositiveSubcase subcase = PositiveSubcase::none;
    double peak = 0.0;                 // x1
    double limit_estimate = 0.0;       // X(T) at the largest converged T
    bool gap_shrinking = false;        // x1 - X(T) decreasing across the sweep
    bool bound_applies = false;        // ρ ∈ (r(1-θ), r)
    std::vector<double> bounds;        // x0 + λ₁(T) w'(x0) / (2ρ(r-ρ)η) per record
    bool within_bound = false;         // X(T) <= bound for every record
    bool bound_below_peak = false;     // every bound < x1
    std::vector<double> gaps;          // x1 - X(T)
};

/// Classification of the terminal-location trend against the wage peak.
PeakGapReport peak_gap_report(const ModelParams& params, const WageProfile& profile,
                              const std::vector<SweepRecord>& records);

/// Terminal-location bound for ρ ∈ (r(1-θ), r); throws InvalidArgument elsewhere.
double stalling_bound(const ModelParams& params, const WageProfile& profile, double lambda1);

}  // namespace reloc
