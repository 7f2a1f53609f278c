#pragma once

// State/costate dynamics under the maximum-principle control rules.
//
// With p1(t) = λ₁ e^{-rt} in closed form, the relocation subsystem is
//   ẋ = y / F(t),   ẏ = -w'(x) λ₁ e^{-rt},   F(t) = 2(ξ λ₁ e^{-rt} + η e^{-ρt}),
// where y is the location costate p2. Consumption follows from λ₁ alone and
// assets are recovered afterwards by the variation-of-constants formula.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reloc/model.hpp"

namespace reloc {

/// Default step count: 2048 per unit of horizon (at least 2048), even, capped at 2^20.
int default_steps(double T);

/// Denominator guard F_min = 1e-12 max(ξλ₁, η).
double denominator_floor(const ModelParams& params, double lambda1);

/// F(t) = 2(ξ λ₁ e^{-rt} + η e^{-ρt}).
double relocation_denominator(double t, double lambda1, const ModelParams& params);

std::pair<double, double> rhs_cauchy(double t, double x, double y, double lambda1, const ModelParams& params,
                                     const WageProfile& profile);

struct Path {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> y;
    double h = 0.0;

    int steps() const { return static_cast<int>(t.size()) - 1; }
};

/// End state of a segment and its sensitivity ∂(x, y)_end / ∂(x, y)_start.
struct SegmentState {
    double x = 0.0;
    double y = 0.0;
    double dx_dx = 1.0;
    double dx_dy = 0.0;
    double dy_dx = 0.0;
    double dy_dy = 1.0;
};

/// The Cauchy system for a fixed multiplier, with time factors tabulated on
/// the half-step lattice so repeated shots only evaluate the wage.
class CauchySystem {
public:
    CauchySystem(const ModelParams& params, const WageProfile& profile, double lambda1, int n_steps);

    Path integrate(double alpha) const;
    /// (x(T), y(T)) without storing the path.
    std::pair<double, double> terminal(double alpha) const;
    /// Grid steps i0..i1 from (x, y), with the equations of variation alongside.
    SegmentState propagate(int i0, int i1, double x, double y) const;
    /// Path restarted at each node index from the given state (multiple shooting).
    Path integrate_segments(std::span<const int> nodes, std::span<const double> xs,
                            std::span<const double> ys) const;

    int steps() const { return n_; }
    double step() const { return h_; }
    double lambda1() const { return lambda1_; }
    const ModelParams& params() const { return params_; }
    const WageProfile& profile() const { return profile_; }

private:
    template <typename Sink>
    void run(int i0, int i1, double x, double y, Sink&& sink) const;

    ModelParams params_;
    const WageProfile& profile_;
    double lambda1_;
    int n_;
    double h_;
    std::vector<double> inv_f_;    // 1/F at t = k h / 2
    std::vector<double> forcing_;  // λ₁ e^{-rt} at t = k h / 2
};

/// Classical RK4 on a uniform grid of n_steps (≥ 16) intervals.
Path integrate_cauchy(const ModelParams& params, const WageProfile& profile, double lambda1, double alpha,
                      int n_steps);

/// c(t) = (1 / (p λ₁))^{1/θ} e^{(r-ρ) t / θ}.
double consumption_rule(double lambda1, double t, const ModelParams& params);

/// z = y / F(t).
double relocation_rule(double y, double t, double lambda1, const ModelParams& params);

/// a(t_i) = e^{r t_i} [a0 + ∫_0^{t_i} (w(x) - p c - ξ z²) e^{-rs} ds], fourth-order cumulative quadrature.
std::vector<double> integrate_assets(const ModelParams& params, const WageProfile& profile,
                                     std::span<const double> x, std::span<const double> c,
                                     std::span<const double> z, double h);

/// a(T) by RK4 on ȧ = r a + w(x) - p c - ξ z² with step 2h, taking the
/// odd-indexed samples as midpoints. Independent of integrate_assets.
double integrate_assets_rk4(const ModelParams& params, const WageProfile& profile, std::span<const double> x,
                            std::span<const double> c, std::span<const double> z, double h);

/// J = ∫ e^{-ρt}(c^{1-θ}/(1-θ) - η z²) dt + e^{-ρT} a(T)^{1-θ}/(1-θ), Simpson.
double objective_eval(const ModelParams& params, std::span<const double> c, std::span<const double> z, double aT,
                      double h);

/// λ₁ = e^{(r-ρ)T} a(T)^{-θ}.
double lambda1_from_aT(double aT, const ModelParams& params);

/// Inverse of lambda1_from_aT.
double aT_from_lambda1(double lambda1, const ModelParams& params);

struct Extremal {
    double alpha = 0.0;
    double lambda1 = 0.0;
    Path path;
    std::vector<double> c;
    std::vector<double> z;
    std::vector<double> a;
    double J = 0.0;
    ControlCaps caps;
    bool mirrored = false;             // searched α ≤ 0 (x0 right of the peak)
    int outer_iterations = 0;
    std::vector<std::string> violations;  // invariant checks that failed

    double aT() const { return a.back(); }
    double XT() const { return path.x.back(); }
};

/// Fill c, z, a, J for a path at the given multiplier.
Extremal assemble_extremal(const ModelParams& params, const WageProfile& profile, double lambda1, double alpha,
                           Path path);

/// Invariant checks against the caps; returns human-readable failures.
std::vector<std::string> check_extremal(const Extremal& extremal, const ModelParams& params, double alpha_tol);

struct ResidualReport {
    double stationarity_c = 0.0;
    double stationarity_z = 0.0;
    double transversality = 0.0;
    double costate_ode = 0.0;
    double positivity = 0.0;   // a(T)
    double confinement = 0.0;  // max distance of x from [0,1]

    /// True when every residual is within tol and a(T) > 0.
    bool passes(double tol) const;
};

/// λ₀ = 1. Stationarity and costate residuals are relative to the size of the
/// terms they balance.
ResidualReport verify_necessary_conditions(const Extremal& extremal, const ModelParams& params,
                                           const WageProfile& profile);

struct GradientCheck {
    double max_density_c = 0.0;
    double max_density_z = 0.0;
    int coordinates = 0;
};

/// Central finite differences of a trapezoid-discretised J with respect to each
/// nodal control value, x and a(T) recomputed, divided by the node's quadrature
/// weight. Interior nodes only; `stride` > 1 checks every stride-th one.
GradientCheck finite_difference_optimality(const Extremal& extremal, const ModelParams& params,
                                           const WageProfile& profile, int stride = 1);

}  // namespace reloc
