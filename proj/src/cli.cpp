#include "reloc/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "reloc/analysis.hpp"
#include "reloc/config.hpp"
#include "reloc/direct_oracle.hpp"
#include "reloc/log.hpp"
#include "reloc/shooting.hpp"

namespace reloc {

namespace {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    double t_min = 5.0;
    double t_max = 60.0;
    int t_steps = 12;
    int n = 0;
    int alpha_grid = 0;
    double lambda1 = 0.0;
};

std::filesystem::path output_dir(const Options& opt, const RunConfig& cfg) {
    const std::filesystem::path dir = opt.out_dir.empty() ? cfg.output_dir : opt.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << body;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

std::string d(double v) { return format_double(v); }

std::string trajectory_csv(const Extremal& ex) {
    std::string s = "t,x,y,c,z,a\n";
    for (std::size_t i = 0; i < ex.path.t.size(); ++i)
        s += d(ex.path.t[i]) + "," + d(ex.path.x[i]) + "," + d(ex.path.y[i]) + "," + d(ex.c[i]) + "," + d(ex.z[i]) +
             "," + d(ex.a[i]) + "\n";
    return s;
}

std::string trace_csv(const std::vector<OuterStep>& trace) {
    std::string s = "outer,lambda1,alpha,aT\n";
    for (const auto& st : trace)
        s += std::to_string(st.index) + "," + d(st.lambda1) + "," + d(st.alpha) + "," + d(st.aT) + "\n";
    return s;
}

std::string extremal_summary(const SolveResult& res) {
    const Extremal& ex = res.extremal;
    std::ostringstream s;
    s << "converged = " << (res.converged ? "true" : "false") << "\n";
    if (!ex.a.empty()) {
        s << "alpha = " << d(ex.alpha) << "\nlambda1 = " << d(ex.lambda1) << "\naT = " << d(ex.aT())
          << "\nXT = " << d(ex.XT()) << "\nJ = " << d(ex.J) << "\nC = " << d(ex.caps.C) << "\nZ = " << d(ex.caps.Z)
          << "\nmirrored = " << (ex.mirrored ? "true" : "false") << "\nouter_iterations = " << ex.outer_iterations
          << "\nviolations = " << ex.violations.size() << "\n";
        for (const auto& v : ex.violations) s << "violation = " << v << "\n";
    }
    return s.str();
}

void dump_trace_if_debug(const std::filesystem::path& dir, const SolveResult& res) {
    if (log_level() == LogLevel::debug) write_file(dir / "trace.csv", trace_csv(res.trace));
}

int cmd_solve(const Options& opt, const RunConfig& cfg) {
    const WageProfile profile(cfg.wage);
    const auto dir = output_dir(opt, cfg);
    const SolveResult res = solve_extremal_traced(cfg.params, profile, cfg.solver);
    dump_trace_if_debug(dir, res);
    const std::string summary = extremal_summary(res);
    if (!res.extremal.a.empty()) write_file(dir / "trajectory.csv", trajectory_csv(res.extremal));
    write_file(dir / "summary.txt", summary);
    std::cout << summary;
    return res.converged ? kExitOk : kExitNonConvergence;
}

int cmd_sweep(const Options& opt, const RunConfig& cfg) {
    if (opt.t_steps < 3) throw InvalidArgument("--t-steps must be at least 3");
    if (!(opt.t_min > 0.0) || !(opt.t_max > opt.t_min)) throw InvalidArgument("need 0 < --t-min < --t-max");
    const WageProfile profile(cfg.wage);
    const auto dir = output_dir(opt, cfg);
    const auto records =
        sweep_horizon(cfg.params, profile, horizon_grid(opt.t_min, opt.t_max, opt.t_steps), cfg.solver, opt.jobs);
    std::string csv = "T,aT,lambda1,XT,J,regime,converged\n";
    int ok = 0;
    for (const auto& rec : records) {
        csv += d(rec.T) + "," + d(rec.aT) + "," + d(rec.lambda1) + "," + d(rec.XT) + "," + d(rec.J) + "," +
               to_string(rec.regime) + "," + (rec.converged ? "true" : "false") + "\n";
        ok += rec.converged;
    }
    write_file(dir / "sweep.csv", csv);
    std::cout << "horizons = " << records.size() << "\nconverged = " << ok << "\n";
    return kExitOk;
}

int cmd_verify(const Options& opt, const RunConfig& cfg) {
    const WageProfile profile(cfg.wage);
    const auto dir = output_dir(opt, cfg);
    const SolveResult res = solve_extremal_traced(cfg.params, profile, cfg.solver);
    dump_trace_if_debug(dir, res);
    if (!res.converged || res.extremal.a.empty()) {
        std::cout << extremal_summary(res);
        return kExitNonConvergence;
    }
    const ResidualReport rep = verify_necessary_conditions(res.extremal, cfg.params, profile);
    std::ostringstream s;
    s << "stationarity_c = " << d(rep.stationarity_c) << "\nstationarity_z = " << d(rep.stationarity_z)
      << "\ntransversality = " << d(rep.transversality) << "\ncostate_ode = " << d(rep.costate_ode)
      << "\npositivity = " << d(rep.positivity) << "\nconfinement = " << d(rep.confinement)
      << "\npasses = " << (rep.passes(1e-6) ? "true" : "false") << "\n";
    write_file(dir / "verify.txt", s.str());
    std::cout << s.str();
    return kExitOk;
}

int cmd_oracle(const Options& opt, const RunConfig& cfg) {
    const WageProfile profile(cfg.wage);
    const auto dir = output_dir(opt, cfg);
    OracleConfig oc = cfg.oracle;
    if (opt.n > 0) oc.intervals = opt.n;
    oc.validate();
    const SolveResult indirect = solve_extremal_traced(cfg.params, profile, cfg.solver);
    const bool have_indirect = indirect.converged && !indirect.extremal.a.empty();
    const DirectSolution sol =
        direct_optimize(cfg.params, profile, oc, have_indirect ? &indirect.extremal : nullptr);

    std::string csv = "interval,c,z\n";
    for (int k = 0; k < sol.N; ++k) csv += std::to_string(k) + "," + d(sol.c[k]) + "," + d(sol.z[k]) + "\n";
    std::ostringstream s;
    s << "N = " << sol.N << "\nseed = " << sol.seed << "\nJ = " << d(sol.J) << "\naT = " << d(sol.aT)
      << "\niterations = " << sol.iterations << "\nbest_start = " << sol.best_start
      << "\nprojected_gradient = " << d(sol.projected_gradient) << "\n";
    if (have_indirect) {
        const Extremal& ex = indirect.extremal;
        auto [c, z] = sample_controls(ex, sol.N);
        const SimulationResult sampled = simulate(cfg.params, profile, c, z, oc.resolution);
        s << "J_indirect = " << d(ex.J) << "\nrelative_gap = " << d(std::abs(sol.J - ex.J) / std::abs(ex.J))
          << "\nJ_indirect_sampled = " << d(sampled.J)
          << "\nsampled_shortfall = " << d((sol.J - sampled.J) / std::abs(sol.J))
          << "\ntrajectory_distance = " << d(trajectory_distance(sol, ex)) << "\n";
    } else {
        s << "J_indirect = unavailable\n";
    }
    write_file(dir / "oracle.csv", csv);
    write_file(dir / "oracle_summary.txt", s.str());
    std::cout << s.str();
    return have_indirect ? kExitOk : kExitNonConvergence;
}

int cmd_extremals(const Options& opt, const RunConfig& cfg) {
    const WageProfile profile(cfg.wage);
    const auto dir = output_dir(opt, cfg);
    double lambda1 = opt.lambda1;
    if (!(lambda1 > 0.0)) {
        const SolveResult res = solve_extremal_traced(cfg.params, profile, cfg.solver);
        lambda1 = res.converged ? res.extremal.lambda1 : initial_multiplier(cfg.params, profile);
    }
    const int grid = opt.alpha_grid > 0 ? opt.alpha_grid : cfg.solver.grid_points;
    if (grid < 16) throw InvalidArgument("--alpha-grid must be at least 16");
    const ExtremalScan scan = count_extremals(lambda1, cfg.params, profile, grid, cfg.solver.n_steps);
    std::string csv = "alpha,g_alpha,root\n";
    for (std::size_t i = 0; i < scan.bracket.alphas.size(); ++i)
        csv += d(scan.bracket.alphas[i]) + "," + d(scan.bracket.g_samples[i]) + "," +
               (scan.root_flags[i] ? "1" : "0") + "\n";
    write_file(dir / "extremals.csv", csv);
    std::cout << "lambda1 = " << d(lambda1) << "\nM0 = " << d(scan.bracket.M0) << "\nroots = " << scan.roots.size()
              << "\n";
    for (double r : scan.roots) std::cout << "root = " << d(r) << "\n";
    return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"Consumption and relocation optimal-control solver", "reloc-opt"};
    app.require_subcommand(1);
    Options opt;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "Run configuration file")->required();
        sub->add_option("--out", opt.out_dir, "Output directory (overrides [output] dir)");
    };
    auto* solve = app.add_subcommand("solve", "Solve for the extremal; write trajectory.csv");
    auto* sweep = app.add_subcommand("sweep", "Solve across horizons; write sweep.csv");
    auto* verify = app.add_subcommand("verify", "Solve and report necessary-condition residuals");
    auto* oracle = app.add_subcommand("oracle", "Direct-transcription optimum vs the extremal");
    auto* extremals = app.add_subcommand("extremals", "Scan the shooting residual over the alpha bracket");
    for (auto* sub : {solve, sweep, verify, oracle, extremals}) common(sub);
    sweep->add_option("--jobs", opt.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("--t-min", opt.t_min, "Smallest horizon");
    sweep->add_option("--t-max", opt.t_max, "Largest horizon");
    sweep->add_option("--t-steps", opt.t_steps, "Number of horizons");
    oracle->add_option("--n", opt.n, "Control intervals");
    extremals->add_option("--alpha-grid", opt.alpha_grid, "Scan points");
    extremals->add_option("--lambda1", opt.lambda1, "Multiplier (default: from a full solve)");

    std::vector<std::string> storage{"reloc-opt"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : storage) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalidConfig;
    }

    try {
        if (!std::ifstream(opt.config_path)) throw IoError("cannot read config file " + opt.config_path);
        const RunConfig cfg = load_config(opt.config_path);
        if (solve->parsed()) return cmd_solve(opt, cfg);
        if (sweep->parsed()) return cmd_sweep(opt, cfg);
        if (verify->parsed()) return cmd_verify(opt, cfg);
        if (oracle->parsed()) return cmd_oracle(opt, cfg);
        return cmd_extremals(opt, cfg);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NonConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const NoRoot& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const Divergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const InfeasibleTerminalAssets& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidConfig;
    }
}

int run_command(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_command(args);
}

}  // namespace reloc
