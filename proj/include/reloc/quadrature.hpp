#pragma once

// Quadrature on uniform grids shared by the solvers.

#include <span>
#include <vector>

namespace reloc {

/// n+1 equally spaced nodes on [0, T].
std::vector<double> uniform_grid(double T, int n);

/// Composite Simpson over samples on a uniform grid with spacing h.
/// Requires an even number of intervals.
double simpson(std::span<const double> f, double h);

/// Composite Simpson weights for n intervals (n even).
std::vector<double> simpson_weights(int n, double h);

/// Trapezoid rule over samples with spacing h.
double trapezoid(std::span<const double> f, double h);

/// Running integrals F[i] = ∫_0^{t_i} f, fourth order: Simpson pairs with a
/// three-point end correction on odd nodes. Needs at least 3 samples.
std::vector<double> cumulative_integral(std::span<const double> f, double h);

/// Weights w_j so that Σ_j w_j f(t_{lo+j}) ≈ ∫_{t_lo}^{t_hi} f using only nodes
/// in [lo, hi]. Simpson for an even count, Simpson 3/8 on the last three
/// intervals for an odd count, trapezoid for a single interval.
std::vector<double> segment_weights(int intervals, double h);

}  // namespace reloc
