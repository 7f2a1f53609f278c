#include "reloc/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Dense>

#include "reloc/analysis.hpp"
#include "reloc/log.hpp"
#include "reloc/quadrature.hpp"
#include "reloc/roots.hpp"

namespace reloc {

std::string to_string(OuterMethod method) { return method == OuterMethod::bracketed ? "bracketed" : "damped"; }

OuterMethod outer_method_from_string(const std::string& name) {
    if (name == "bracketed") return OuterMethod::bracketed;
    if (name == "damped") return OuterMethod::damped;
    throw InvalidArgument("unknown outer method '" + name + "' (expected bracketed or damped)");
}

void ShootConfig::validate() const {
    if (!(alpha_tol > 0.0)) throw InvalidArgument("alpha_tol > 0");
    if (!(lambda_tol > 0.0)) throw InvalidArgument("lambda_tol > 0");
    if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("damping ∈ (0,1]");
    if (max_outer < 1) throw InvalidArgument("max_outer >= 1");
    if (grid_points < 16) throw InvalidArgument("grid_points >= 16");
    if (n_steps != 0 && (n_steps < 16 || n_steps % 2 != 0)) throw InvalidArgument("n_steps even and >= 16 (or 0)");
    if (!(fallback_speed_cap >= 0.0)) throw InvalidArgument("fallback_speed_cap >= 0");
    if (!(segment_length > 0.0)) throw InvalidArgument("segment_length > 0");
}

namespace {

int steps_for(const ModelParams& params, int n_steps) { return n_steps > 0 ? n_steps : default_steps(params.T); }

// Newton on the restart states of K segments. Unknowns (α, x_1, y_1, ..., x_{K-1}, y_{K-1});
// equations: continuity at each restart node and y(T) = 0.
class MultipleShooting {
public:
    MultipleShooting(const CauchySystem& system, int segments) : sys_(system) {
        const int n = system.steps();
        segments = std::clamp(segments, 2, n);
        for (int k = 0; k < segments; ++k)
            nodes_.push_back(static_cast<int>(std::llround(static_cast<double>(k) * n / segments)));
    }

    bool solve(double alpha, const BracketInfo& bracket, double tol, ShootResult& out) {
        const int K = static_cast<int>(nodes_.size());
        const int m = 2 * K - 1;
        Eigen::VectorXd u(m);
        u(0) = alpha;
        // Seed from the single shot up to where its costate is smallest before it
        // leaves the admissible box (the turnpike, if there is one); beyond that,
        // hold that location with a vanishing costate.
        const double ymax = std::max(std::abs(bracket.lo), std::abs(bracket.hi));
        std::vector<double> xs(K, sys_.params().x0), ys(K, 0.0);
        try {
            const Path seed = sys_.integrate(alpha);
            std::size_t hold = 0;
            for (std::size_t i = 1; i < seed.x.size(); ++i) {
                if (!(seed.x[i] >= 0.0 && seed.x[i] <= 1.0 && std::abs(seed.y[i]) <= ymax)) break;
                if (std::abs(seed.y[i]) <= std::abs(seed.y[hold])) hold = i;
            }
            for (int k = 1; k < K; ++k) {
                const auto i = static_cast<std::size_t>(nodes_[k]);
                xs[k] = seed.x[std::min(i, hold)];
                ys[k] = i <= hold ? seed.y[i] : 0.0;
            }
        } catch (const Divergence&) {
        }
        for (int k = 1; k < K; ++k) {
            u(2 * k - 1) = xs[k];
            u(2 * k) = ys[k];
        }

        Eigen::VectorXd R(m);
        Eigen::MatrixXd J(m, m);
        if (!residual(u, R, &J)) return false;
        for (int iter = 0; iter < 60; ++iter) {
            const double norm = R.lpNorm<Eigen::Infinity>();
            const Eigen::VectorXd du = J.partialPivLu().solve(-R);
            if (norm <= tol * std::max(1.0, std::abs(u(0)))) {
                // One polishing step; Newton is quadratic here, so it reaches rounding level.
                Eigen::VectorXd polished = u + du, Rp(m);
                if (du.allFinite() && residual(polished, Rp, nullptr) &&
                    Rp.lpNorm<Eigen::Infinity>() < norm)
                    finish(polished, Rp, out);
                else
                    finish(u, R, out);
                return true;
            }
            if (!du.allFinite()) return false;
            double step = 1.0;
            Eigen::VectorXd trial(m), Rt(m);
            bool accepted = false;
            for (int half = 0; half < 40 && !accepted; ++half, step *= 0.5) {
                trial = u + step * du;
                accepted = residual(trial, Rt, nullptr) && Rt.lpNorm<Eigen::Infinity>() < norm;
            }
            if (!accepted) return false;
            u = trial;
            if (!residual(u, R, &J)) return false;
        }
        return false;
    }

private:
    bool residual(const Eigen::VectorXd& u, Eigen::VectorXd& R, Eigen::MatrixXd* J) const {
        const int K = static_cast<int>(nodes_.size());
        if (J) J->setZero();
        try {
            for (int k = 0; k < K; ++k) {
                const double x = k == 0 ? sys_.params().x0 : u(2 * k - 1);
                const double y = k == 0 ? u(0) : u(2 * k);
                const int end = k + 1 < K ? nodes_[k + 1] : sys_.steps();
                const SegmentState s = sys_.propagate(nodes_[k], end, x, y);
                const int row = 2 * k;
                const int col_y = k == 0 ? 0 : 2 * k;
                if (k + 1 < K) {
                    R(row) = s.x - u(2 * k + 1);
                    R(row + 1) = s.y - u(2 * k + 2);
                    if (J) {
                        (*J)(row, 2 * k + 1) = -1.0;
                        (*J)(row + 1, 2 * k + 2) = -1.0;
                        (*J)(row, col_y) = s.dx_dy;
                        (*J)(row + 1, col_y) = s.dy_dy;
                        if (k > 0) {
                            (*J)(row, 2 * k - 1) = s.dx_dx;
                            (*J)(row + 1, 2 * k - 1) = s.dy_dx;
                        }
                    }
                } else {
                    R(row) = s.y;
                    if (J) {
                        (*J)(row, col_y) = s.dy_dy;
                        if (k > 0) (*J)(row, 2 * k - 1) = s.dy_dx;
                    }
                }
            }
        } catch (const Divergence&) {
            return false;
        }
        return R.allFinite();
    }

    void finish(const Eigen::VectorXd& u, const Eigen::VectorXd& R, ShootResult& out) const {
        const int K = static_cast<int>(nodes_.size());
        out.alpha = u(0);
        out.yT = R(2 * K - 2);
        out.nodes = nodes_;
        out.node_x.assign(1, sys_.params().x0);
        out.node_y.assign(1, u(0));
        for (int k = 1; k < K; ++k) {
            out.node_x.push_back(u(2 * k - 1));
            out.node_y.push_back(u(2 * k));
        }
        out.continuity = R.head(2 * K - 2).lpNorm<Eigen::Infinity>();
    }

    const CauchySystem& sys_;
    std::vector<int> nodes_;
};

}  // namespace

Path ShootResult::path(const CauchySystem& system) const {
    if (nodes.empty()) return system.integrate(alpha);
    return system.integrate_segments(nodes, node_x, node_y);
}

BracketInfo shooting_bracket(double lambda1, const ModelParams& params, const WageProfile& profile) {
    BracketInfo info;
    info.M0 = lambda1 * profile.sup_abs_dw() * (1.0 - std::exp(-params.r * params.T)) / params.r;
    info.mirrored = profile.family() != WageFamily::constant && params.x0 > profile.peak_location();
    if (info.mirrored) {
        info.lo = -(info.M0 + 1.0);
        info.hi = 0.0;
    } else {
        info.lo = 0.0;
        info.hi = info.M0 + 1.0;
    }
    return info;
}

double g_alpha(double alpha, double lambda1, const ModelParams& params, const WageProfile& profile, int n_steps) {
    const Path path = integrate_cauchy(params, profile, lambda1, alpha, steps_for(params, n_steps));
    std::vector<double> integrand(path.t.size());
    for (std::size_t i = 0; i < path.t.size(); ++i)
        integrand[i] = profile.at(path.x[i]).dw * std::exp(-params.r * path.t[i]);
    return alpha - lambda1 * simpson(integrand, path.h);
}

ShootResult shoot_alpha(const CauchySystem& system, const ShootConfig& config) {
    const ModelParams& params = system.params();
    const WageProfile& profile = system.profile();
    const double lambda1 = system.lambda1();
    BracketInfo bracket = shooting_bracket(lambda1, params, profile);

    ShootResult out;
    out.mirrored = bracket.mirrored;
    auto residual = [&](double alpha) {
        ++out.evaluations;
        return system.terminal(alpha).second;
    };
    const double y_zero = residual(0.0);
    if (std::abs(y_zero) <= config.alpha_tol) {
        out.alpha = 0.0;
        out.yT = y_zero;
        return out;
    }
    const double y_lo = bracket.lo == 0.0 ? y_zero : residual(bracket.lo);
    const double y_hi = bracket.hi == 0.0 ? y_zero : residual(bracket.hi);
    if ((y_lo > 0.0) == (y_hi > 0.0)) {
        for (int i = 0; i < config.grid_points; ++i) {
            const double a = bracket.lo + (bracket.hi - bracket.lo) * i / (config.grid_points - 1);
            bracket.alphas.push_back(a);
            bracket.g_samples.push_back(g_alpha(a, lambda1, params, profile, system.steps()));
        }
        std::ostringstream os;
        os.precision(10);
        os << "no sign change of y(T, alpha) on [" << bracket.lo << ", " << bracket.hi << "] at lambda1 = " << lambda1;
        throw NoRoot(os.str(), std::move(bracket.alphas), std::move(bracket.g_samples));
    }
    const RootResult root = brent_root(residual, bracket.lo, bracket.hi, y_lo, y_hi, config.alpha_tol, 0.0, 400);
    out.alpha = root.x;
    out.yT = root.fx;
    const double tol = config.alpha_tol * std::max(1.0, std::abs(out.alpha));
    const double xT = system.terminal(out.alpha).first;
    if (std::abs(out.yT) > tol || !(xT >= 0.0 && xT <= 1.0)) {
        const int segments = static_cast<int>(std::ceil(params.T / config.segment_length));
        MultipleShooting ms(system, segments);
        ShootResult refined = out;
        if (ms.solve(out.alpha, bracket, config.alpha_tol, refined)) {
            log_debug([&] {
                std::ostringstream os;
                os.precision(6);
                os << "multiple shooting over " << refined.nodes.size() << " segments: y(T) " << out.yT << " -> "
                   << refined.yT;
                return os.str();
            });
            out = std::move(refined);
        }
    }
    return out;
}

ShootResult shoot_alpha(double lambda1, const ModelParams& params, const WageProfile& profile,
                        const ShootConfig& config) {
    const CauchySystem system(params, profile, lambda1, steps_for(params, config.n_steps));
    return shoot_alpha(system, config);
}

ExtremalScan count_extremals(double lambda1, const ModelParams& params, const WageProfile& profile,
                             int grid_points, int n_steps) {
    if (grid_points < 2) throw InvalidArgument("grid_points >= 2");
    const int steps = steps_for(params, n_steps);
    const CauchySystem system(params, profile, lambda1, steps);
    ExtremalScan scan;
    scan.bracket = shooting_bracket(lambda1, params, profile);
    auto& b = scan.bracket;
    for (int i = 0; i < grid_points; ++i) {
        const double a = b.lo + (b.hi - b.lo) * i / (grid_points - 1);
        b.alphas.push_back(a);
        b.g_samples.push_back(g_alpha(a, lambda1, params, profile, steps));
    }
    scan.root_flags.assign(grid_points, false);
    constexpr double zero_tol = 1e-12;
    auto residual = [&](double alpha) { return system.terminal(alpha).second; };
    for (int i = 0; i < grid_points; ++i) {
        const double gi = b.g_samples[i];
        if (std::abs(gi) <= zero_tol) {
            scan.roots.push_back(b.alphas[i]);
            scan.root_flags[i] = true;
            continue;
        }
        if (i + 1 < grid_points) {
            const double gn = b.g_samples[i + 1];
            if (std::abs(gn) > zero_tol && (gi > 0.0) != (gn > 0.0)) {
                const double ya = residual(b.alphas[i]), yb = residual(b.alphas[i + 1]);
                double root = 0.5 * (b.alphas[i] + b.alphas[i + 1]);
                if ((ya > 0.0) != (yb > 0.0))
                    root = brent_root(residual, b.alphas[i], b.alphas[i + 1], ya, yb, 1e-12, 0.0, 400).x;
                scan.roots.push_back(root);
                scan.root_flags[i] = true;
            }
        }
    }
    return scan;
}

double initial_multiplier(const ModelParams& params, const WageProfile& profile) {
    double W = profile.at(params.x0).w;
    ConstantWageSolution cf = closed_form_constant_wage(params, W);
    if (!(cf.aT > 0.0)) cf = closed_form_constant_wage(params, profile.max_on_unit());
    if (!(cf.aT > 0.0)) return 1.0;
    return lambda1_from_aT(cf.aT, params);
}

namespace {

constexpr double kNoiseFactor = 1e3;

struct Evaluation {
    double lambda1 = 0.0;
    double mismatch = std::numeric_limits<double>::infinity();  // a_budget / a_target - 1
    std::optional<Extremal> extremal;
};

class OuterSolver {
public:
    OuterSolver(const ModelParams& params, const WageProfile& profile, const ShootConfig& config)
        : params_(params), profile_(profile), config_(config), steps_(steps_for(params, config.n_steps)) {}

    Evaluation evaluate(double lambda1) {
        const CauchySystem system(params_, profile_, lambda1, steps_);
        const ShootResult shot = shoot_alpha(system, config_);
        Extremal ex = assemble_extremal(params_, profile_, lambda1, shot.alpha, shot.path(system));
        ex.mirrored = shot.mirrored;
        Evaluation ev;
        ev.lambda1 = lambda1;
        ev.mismatch = ex.aT() / aT_from_lambda1(lambda1, params_) - 1.0;
        trace_.push_back({static_cast<int>(trace_.size()), lambda1, shot.alpha, ex.aT()});
        log_debug([&] {
            std::ostringstream os;
            os.precision(12);
            os << "outer " << trace_.size() - 1 << ": lambda1=" << lambda1 << " alpha=" << shot.alpha
               << " aT=" << ex.aT() << " mismatch=" << ev.mismatch;
            return os.str();
        });
        ev.extremal = std::move(ex);
        if (!best_.extremal || std::abs(ev.mismatch) < std::abs(best_.mismatch)) best_ = ev;
        return ev;
    }

    double consistency(const Evaluation& ev) const {
        if (!(ev.extremal && ev.extremal->aT() > 0.0)) return std::numeric_limits<double>::infinity();
        return std::abs(ev.lambda1 - lambda1_from_aT(ev.extremal->aT(), params_)) / ev.lambda1;
    }

    bool bracketed() {
        double u = std::log(initial_multiplier(params_, profile_));
        double f = evaluate(std::exp(u)).mismatch;
        if (consistency(best_) <= config_.lambda_tol) return true;
        // f increases with λ₁: less consumption leaves more assets while the target shrinks.
        double step = f < 0.0 ? 0.5 : -0.5;
        double u_other = u, f_other = f;
        for (int k = 0; k < 80 && (f_other > 0.0) == (f > 0.0); ++k) {
            if (static_cast<int>(trace_.size()) >= config_.max_outer) return false;
            u = u_other;
            f = f_other;
            u_other = u + step;
            f_other = evaluate(std::exp(u_other)).mismatch;
            step *= 1.6;
        }
        if ((f_other > 0.0) == (f > 0.0)) return false;
        auto fn = [&](double v) {
            if (static_cast<int>(trace_.size()) >= config_.max_outer) throw NonConvergence("outer iteration cap");
            return evaluate(std::exp(v)).mismatch;
        };
        RootResult root;
        try {
            root = brent_root(fn, u, u_other, f, f_other, 0.25 * config_.lambda_tol, 1e-3 * config_.lambda_tol,
                              config_.max_outer);
        } catch (const NonConvergence&) {
            return false;
        }
        if (consistency(best_) <= config_.lambda_tol) return true;
        // λ₁ pinned to the bracket floor: when a(T) is a small difference of large
        // terms its rounding noise caps the attainable consistency. Accept within
        // a bounded factor; a collapse onto a jump would be far outside it.
        return root.converged && consistency(best_) <= kNoiseFactor * config_.lambda_tol;
    }

    bool damped() {
        double lambda1 = initial_multiplier(params_, profile_);
        for (int k = 0; k < config_.max_outer; ++k) {
            const Evaluation ev = evaluate(lambda1);
            const double aT = ev.extremal->aT();
            // Negative budget: consumption is too high, so the multiplier is too small.
            const double target = aT > 0.0 ? lambda1_from_aT(aT, params_) : 10.0 * lambda1;
            if (std::abs(target - lambda1) / lambda1 <= config_.lambda_tol) {
                best_ = ev;
                return true;
            }
            lambda1 = (1.0 - config_.damping) * lambda1 + config_.damping * target;
            if (!std::isfinite(lambda1) || lambda1 <= 0.0) return false;
        }
        return false;
    }

    Evaluation& best() { return best_; }
    std::vector<OuterStep>& trace() { return trace_; }

private:
    ModelParams params_;
    const WageProfile& profile_;
    ShootConfig config_;
    int steps_;
    Evaluation best_;
    std::vector<OuterStep> trace_;
};

}  // namespace

SolveResult solve_extremal_traced(const ModelParams& params, const WageProfile& profile, const ShootConfig& config) {
    params.validate();
    config.validate();
    OuterSolver solver(params, profile, config);
    SolveResult result;
    try {
        result.converged = config.outer == OuterMethod::bracketed ? solver.bracketed() : solver.damped();
    } catch (const NoRoot& e) {
        log_info(std::string("shooting failed: ") + e.what());
        result.converged = false;
    }
    result.trace = std::move(solver.trace());
    if (!solver.best().extremal) return result;

    Extremal ex = std::move(*solver.best().extremal);
    ex.outer_iterations = static_cast<int>(result.trace.size());
    double fallback = config.fallback_speed_cap;
    if (params.xi == 0.0 && fallback <= 0.0) {
        double vmax = 0.0;
        for (double v : ex.z) vmax = std::max(vmax, std::abs(v));
        fallback = std::max(2.0 * vmax, 1e-8);
    }
    ex.caps = compute_control_caps(params, profile, fallback);
    ex.violations = check_extremal(ex, params, config.alpha_tol);
    if (ex.mirrored) log_info("x0 lies right of the wage peak; searched the mirrored bracket alpha <= 0");
    result.extremal = std::move(ex);
    return result;
}

Extremal solve_extremal(const ModelParams& params, const WageProfile& profile, const ShootConfig& config) {
    SolveResult result = solve_extremal_traced(params, profile, config);
    if (!result.converged) {
        std::ostringstream os;
        os.precision(12);
        os << "outer multiplier solve did not converge after " << result.trace.size() << " evaluations";
        for (const auto& step : result.trace)
            os << "\n  " << step.index << ": lambda1=" << step.lambda1 << " alpha=" << step.alpha << " aT=" << step.aT;
        throw NonConvergence(os.str());
    }
    return std::move(result.extremal);
}

}  // namespace reloc
