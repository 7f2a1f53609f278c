#include "reloc/integral_solver.hpp"

#include <algorithm>
#include <cmath>

#include "reloc/dynamics.hpp"
#include "reloc/quadrature.hpp"

namespace reloc {

KernelTable::KernelTable(const ModelParams& params, double lambda1, int n) {
    if (n < 4 || n + 1 > kMaxKernelNodes + 1) throw InvalidArgument("kernel table needs 4 <= n <= 4096 intervals");
    if (!(lambda1 > 0.0)) throw InvalidArgument("lambda1 > 0");
    h_ = params.T / n;
    grid_ = uniform_grid(params.T, n);
    std::vector<double> inv_f(grid_.size());
    const double floor = denominator_floor(params, lambda1);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const double F = relocation_denominator(grid_[i], lambda1, params);
        if (!(F >= floor) || F <= 0.0) throw SingularDenominator("relocation denominator below floor");
        inv_f[i] = 1.0 / F;
    }
    cumulative_ = cumulative_integral(inv_f, h_);
}

double green_kernel(double t, double tau, double lambda1, const ModelParams& params) {
    const double upper = std::min(t, tau);
    if (upper < 0.0 || std::max(t, tau) > params.T * (1.0 + 1e-12))
        throw InvalidArgument("kernel arguments must lie in [0, T]");
    if (upper == 0.0) return 0.0;
    const int n = 512;
    const double h = upper / n;
    const double floor = denominator_floor(params, lambda1);
    std::vector<double> inv_f(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double F = relocation_denominator(h * i, lambda1, params);
        if (!(F >= floor) || F <= 0.0) throw SingularDenominator("relocation denominator below floor");
        inv_f[i] = 1.0 / F;
    }
    return simpson(inv_f, h);
}

PicardResult picard_solve(const ModelParams& params, const WageProfile& profile, double lambda1,
                          const PicardConfig& config) {
    params.validate();
    const KernelTable kernel(params, lambda1, config.n);
    const std::size_t m = kernel.size();
    const std::size_t n = m - 1;
    const double h = kernel.step();
    const auto& t = kernel.grid();
    std::vector<double> forcing(m);
    for (std::size_t j = 0; j < m; ++j) forcing[j] = lambda1 * std::exp(-params.r * t[j]);

    PicardResult out;
    out.t = t;
    out.x.assign(m, params.x0);
    std::vector<double> f(m), next(m);
    for (int it = 1; it <= config.max_iterations; ++it) {
        for (std::size_t j = 0; j < m; ++j) f[j] = forcing[j] * profile.at(out.x[j]).dw;
        // Split each row at τ = t_i so the quadrature never straddles the kernel's kink.
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            const auto left = segment_weights(static_cast<int>(i), h);
            for (std::size_t j = 0; j <= i; ++j) s += left[j] * kernel(i, j) * f[j];
            const auto right = segment_weights(static_cast<int>(n - i), h);
            for (std::size_t j = i; j < m; ++j) s += right[j - i] * kernel(i, j) * f[j];
            next[i] = params.x0 + s;
        }
        double change = 0.0;
        for (std::size_t i = 0; i < m; ++i) change = std::max(change, std::abs(next[i] - out.x[i]));
        out.x.swap(next);
        out.iterations = it;
        out.last_change = change;
        if (!std::isfinite(change)) break;
        if (change <= config.tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

double second_order_defect(const ModelParams& params, const WageProfile& profile, double lambda1,
                           const std::vector<double>& x, double h) {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        const double t = h * static_cast<double>(i);
        const double flux_right = relocation_denominator(t + 0.5 * h, lambda1, params) * (x[i + 1] - x[i]) / h;
        const double flux_left = relocation_denominator(t - 0.5 * h, lambda1, params) * (x[i] - x[i - 1]) / h;
        const double defect = (flux_right - flux_left) / h + lambda1 * std::exp(-params.r * t) * profile.at(x[i]).dw;
        worst = std::max(worst, std::abs(defect));
    }
    return worst;
}

double terminal_speed(const std::vector<double>& x, double h) {
    const std::size_t n = x.size() - 1;
    if (x.size() < 5) throw InvalidArgument("terminal_speed needs at least 5 samples");
    return (25.0 * x[n] - 48.0 * x[n - 1] + 36.0 * x[n - 2] - 16.0 * x[n - 3] + 3.0 * x[n - 4]) / (12.0 * h);
}

}  // namespace reloc
