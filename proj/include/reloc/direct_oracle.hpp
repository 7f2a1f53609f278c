#pragma once

// Direct transcription: piecewise-constant controls on N intervals, objective
// maximised by projected gradient ascent. Shares no code path with the
// maximum-principle solver beyond the wage profile.

#include <cstdint>
#include <optional>
#include <vector>

#include "reloc/dynamics.hpp"
#include "reloc/model.hpp"

namespace reloc {

struct OracleConfig {
    int intervals = 128;            // N
    std::uint64_t seed = 20240601;  // randomized start
    int max_iterations = 4000;      // per penalty round
    double gradient_tol = 1e-5;     // projected-gradient sup-norm
    int resolution = 2048;          // total asset-integration substeps on [0,T]
    int penalty_rounds = 4;
    double penalty_initial = 1e2;   // ×10 per round

    void validate() const;
    bool operator==(const OracleConfig&) const = default;
};

struct SimulationResult {
    double J = 0.0;
    double aT = 0.0;
    double XT = 0.0;
    bool feasible = true;
    std::vector<double> x;  // location at the N + 1 interval boundaries
};

/// Terminal-asset floor: 1e-6 a0 e^{rT}, or 1e-8 when a0 = 0.
double terminal_asset_floor(const ModelParams& params);

class Simulator {
public:
    Simulator(const ModelParams& params, const WageProfile& profile, int intervals, int resolution = 2048);

    /// Exact x per interval, RK4 assets, Simpson for J. Infeasible runs return
    /// J with the bequest taken at the floor minus a unit quadratic penalty.
    SimulationResult run(const std::vector<double>& c, const std::vector<double>& z) const;

    /// Running utility plus bequest at max(a(T), floor), minus weight·shortfall².
    double penalized(const std::vector<double>& c, const std::vector<double>& z, double weight) const;

    int intervals() const { return n_; }
    int substeps() const { return m_; }

private:
    struct Raw {
        double running;
        double aT;
        double XT;
    };
    Raw integrate(const std::vector<double>& c, const std::vector<double>& z, std::vector<double>* x) const;

    ModelParams params_;
    const WageProfile& profile_;
    int n_;
    int m_;
    double dt_;
    double floor_;
    std::vector<double> disc_rho_;  // e^{-ρt} on the substep lattice
};

SimulationResult simulate(const ModelParams& params, const WageProfile& profile, const std::vector<double>& c,
                          const std::vector<double>& z, int resolution = 2048);

struct DirectSolution {
    int N = 0;
    std::vector<double> c;
    std::vector<double> z;
    std::vector<double> x;  // N + 1 boundary locations
    double J = 0.0;
    double aT = 0.0;
    int iterations = 0;
    int best_start = -1;      // 0 constant, 1 warm start, 2 randomized
    std::vector<double> start_J;
    double projected_gradient = 0.0;
    std::uint64_t seed = 0;
    ControlCaps caps;
};

/// Interval averages of an extremal's controls on an N-interval grid.
std::pair<std::vector<double>, std::vector<double>> sample_controls(const Extremal& extremal, int intervals);

DirectSolution direct_optimize(const ModelParams& params, const WageProfile& profile, const OracleConfig& config,
                               const Extremal* warm_start = nullptr);

/// Sup-distance between the direct x at interval boundaries and the extremal's x.
double trajectory_distance(const DirectSolution& direct, const Extremal& extremal);

}  // namespace reloc
