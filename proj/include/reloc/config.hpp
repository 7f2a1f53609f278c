#pragma once

// Plain-text run configuration:
//
//   [params]        rho, r, theta, eta, xi, p, T, a0, x0
//   [wage]          family (required), height, level, knots, values, blend_width
//   [solver]        alpha_tol, lambda_tol, damping, max_outer, grid_points, n_steps, outer, fallback_speed_cap,
//                   segment_length
//   [oracle]        intervals, seed, max_iterations, gradient_tol, resolution, penalty_rounds, penalty_initial
//   [output]        dir
//
// One `key = value` per line; '#' starts a comment; lists are comma separated.

#include <string>

#include "reloc/direct_oracle.hpp"
#include "reloc/model.hpp"
#include "reloc/shooting.hpp"

namespace reloc {

/// Syntax or validation failure; `line` is 0 when the problem is not tied to one line.
class ConfigError : public InvalidArgument {
public:
    ConfigError(const std::string& what, int line);
    int line = 0;
};

struct RunConfig {
    ModelParams params;
    WageSpec wage;
    ShootConfig solver;
    OracleConfig oracle;
    std::string output_dir = ".";

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;
    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Inverse of parse_config; doubles use 17 significant digits.
std::string render_config(const RunConfig& config);

/// "%.17g".
std::string format_double(double value);

}  // namespace reloc
