#pragma once

// Shooting on the initial costate α = y(0) for a fixed multiplier, and the
// outer solve that makes λ₁ consistent with the terminal assets it produces.

#include <functional>
#include <string>
#include <vector>

#include "reloc/dynamics.hpp"
#include "reloc/model.hpp"

namespace reloc {

enum class OuterMethod { bracketed, damped };

std::string to_string(OuterMethod method);
OuterMethod outer_method_from_string(const std::string& name);

struct ShootConfig {
    double alpha_tol = 1e-10;   // on |y(T, α)|, relative to max(1, |α|)
    double lambda_tol = 1e-10;  // relative λ₁ mismatch at convergence
    double damping = 0.5;       // ω, damped outer iteration only
    int max_outer = 200;
    int grid_points = 64;       // α-scan resolution
    int n_steps = 0;            // 0: default_steps(T)
    OuterMethod outer = OuterMethod::bracketed;
    double fallback_speed_cap = 0.0;  // Z when xi = 0; 0 = twice the pilot max |z|
    double segment_length = 2.5;      // multiple-shooting segment length when single shooting is ill-conditioned

    void validate() const;
    bool operator==(const ShootConfig&) const = default;
};

struct BracketInfo {
    double M0 = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool mirrored = false;
    std::vector<double> alphas;
    std::vector<double> g_samples;
};

/// M0 = λ₁ sup|w'| (1 - e^{-rT}) / r and the search interval [0, M0+1]
/// (mirrored to [-(M0+1), 0] when x0 lies right of the wage peak).
BracketInfo shooting_bracket(double lambda1, const ModelParams& params, const WageProfile& profile);

/// g(α) = α - λ₁ ∫_0^T w'(x(τ, α)) e^{-rτ} dτ (Simpson on the RK4 path).
double g_alpha(double alpha, double lambda1, const ModelParams& params, const WageProfile& profile, int n_steps = 0);

struct ShootResult {
    double alpha = 0.0;
    double yT = 0.0;
    bool mirrored = false;
    int evaluations = 0;
    // Multiple-shooting refinement: restart indices and states (node 0 is (x0, α)).
    // Empty when the single shot already met the tolerance.
    std::vector<int> nodes;
    std::vector<double> node_x;
    std::vector<double> node_y;
    double continuity = 0.0;  // largest state jump across a restart node

    Path path(const CauchySystem& system) const;
};

/// Brent on α ↦ y(T, α) over the bracket. Throws NoRoot with samples attached.
/// Over long horizons y(T, ·) grows exponentially in α and the single shot
/// cannot reach the tolerance in double precision; the Brent root then seeds a
/// Newton solve over segments of length segment_length (multiple shooting).
ShootResult shoot_alpha(double lambda1, const ModelParams& params, const WageProfile& profile,
                        const ShootConfig& config);
ShootResult shoot_alpha(const CauchySystem& system, const ShootConfig& config);

struct ExtremalScan {
    BracketInfo bracket;
    std::vector<double> roots;
    std::vector<bool> root_flags;  // per scan point: a root lies in (α_i, α_{i+1}] or at α_i
};

/// Uniform scan of g over the bracket; every sign change is polished by Brent.
ExtremalScan count_extremals(double lambda1, const ModelParams& params, const WageProfile& profile,
                             int grid_points, int n_steps = 0);

struct OuterStep {
    int index = 0;
    double lambda1 = 0.0;
    double alpha = 0.0;
    double aT = 0.0;
};

struct SolveResult {
    Extremal extremal;
    std::vector<OuterStep> trace;
    bool converged = false;
};

/// λ₁ from the constant-wage closed form at W = w(x0).
double initial_multiplier(const ModelParams& params, const WageProfile& profile);

/// Full solve. Never throws on non-convergence: the trace and flag report it.
SolveResult solve_extremal_traced(const ModelParams& params, const WageProfile& profile, const ShootConfig& config);

/// Full solve; throws NonConvergence carrying the iteration trace in its message.
Extremal solve_extremal(const ModelParams& params, const WageProfile& profile, const ShootConfig& config = {});

}  // namespace reloc
