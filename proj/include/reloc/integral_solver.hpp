#pragma once

// Location BVP as a fixed point of the Green-kernel integral equation
//   x(t) = x0 + ∫_0^T K(t,τ) λ₁ e^{-rτ} w'(x(τ)) dτ,   K(t,τ) = ∫_0^{min(t,τ)} ds / F(s).

#include <vector>

#include "reloc/model.hpp"

namespace reloc {

inline constexpr int kMaxKernelNodes = 4096;

class KernelTable {
public:
    /// n intervals on [0, T] (n + 1 nodes, at most kMaxKernelNodes).
    KernelTable(const ModelParams& params, double lambda1, int n);

    double operator()(std::size_t i, std::size_t j) const { return cumulative_[std::min(i, j)]; }
    const std::vector<double>& grid() const { return grid_; }
    /// G(t_i) = ∫_0^{t_i} ds / F(s).
    const std::vector<double>& cumulative() const { return cumulative_; }
    std::size_t size() const { return grid_.size(); }
    double step() const { return h_; }

private:
    std::vector<double> grid_;
    std::vector<double> cumulative_;
    double h_ = 0.0;
};

/// K(t, τ) by quadrature of 1/F on [0, min(t, τ)].
double green_kernel(double t, double tau, double lambda1, const ModelParams& params);

struct PicardConfig {
    int n = 2048;
    double tol = 1e-10;
    int max_iterations = 500;
};

struct PicardResult {
    std::vector<double> t;
    std::vector<double> x;
    int iterations = 0;
    double last_change = 0.0;
    bool converged = false;
};

/// Picard iteration from x ≡ x0. Non-contraction is reported through `converged`.
PicardResult picard_solve(const ModelParams& params, const WageProfile& profile, double lambda1,
                          const PicardConfig& config = {});

/// Sup-norm defect of d/dt(F ẋ) + λ₁ e^{-rt} w'(x) by finite differences.
double second_order_defect(const ModelParams& params, const WageProfile& profile, double lambda1,
                           const std::vector<double>& x, double h);

/// ẋ(T) by a fourth-order one-sided difference.
double terminal_speed(const std::vector<double>& x, double h);

}  // namespace reloc
