#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "reloc/cli.hpp"
#include "reloc/config.hpp"

using namespace reloc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("reloc_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
    const fs::path path = dir / "run.cfg";
    std::ofstream(path) << body;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("parse_config basics") {
    const RunConfig c = parse_config("[params]\ntheta = 0.5\nT = 4  # horizon\n\n[wage]\nfamily = quadratic\n");
    CHECK(c.params.theta == 0.5);
    CHECK(c.params.T == 4.0);
    CHECK(c.params.rho == ModelParams{}.rho);
    CHECK(c.wage.family == WageFamily::quadratic);
}

TEST_CASE("parse_config errors") {
    CHECK_THROWS_WITH_AS(parse_config("[params]\ntheta = 1.2\n[wage]\nfamily = quadratic\n"),
                         doctest::Contains("theta ∈ (0,1)"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[params]\n[wage]\n"), doctest::Contains("family"), ConfigError);
    try {
        parse_config("[params]\nrho = 0.1\nbogus = 3\n[wage]\nfamily = quadratic\n");
        FAIL("expected error");
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[params]\nrho = abc\n[wage]\nfamily = quadratic\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[nowhere]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("rho = 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[params]\nrho 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[wage]\nfamily = cubic\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[wage]\nfamily = quadratic\nfamily = quadratic\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[wage]\nfamily = spline\nknots = 0, 0.5, 1\nvalues = 0, -1, 0\n"), ConfigError);
}

TEST_CASE("property: render/parse round trip") {
    RunConfig c;
    c.params.rho = 0.1 / 3.0;
    c.params.theta = 0.37;
    c.params.x0 = 1.0 / 7.0;
    c.wage.family = WageFamily::spline;
    c.wage.knots = {0.0, 0.3, 0.7, 1.0};
    c.wage.values = {0.0, 0.2, 0.21 / 3.0, 0.0};
    c.solver.outer = OuterMethod::damped;
    c.solver.damping = 0.3;
    c.oracle.seed = 987654321;
    c.oracle.intervals = 64;
    c.output_dir = "results/run1";
    CHECK(parse_config(render_config(c)) == c);

    RunConfig d;
    d.wage.family = WageFamily::constant;
    d.wage.level = 0.123456789012345678;
    CHECK(parse_config(render_config(d)) == d);
    CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("run_command: solve on a constant wage") {
    const auto dir = scratch("solve");
    const auto cfg = write_config(dir, "[params]\nT = 3\n[wage]\nfamily = constant\nlevel = 0.25\n");
    CHECK(run_command({"solve", "--config", cfg.string(), "--out", (dir / "out").string()}) == 0);
    const auto rows = read_csv(dir / "out" / "trajectory.csv");
    REQUIRE(rows.size() > 10);
    CHECK(rows[0] == std::vector<std::string>{"t", "x", "y", "c", "z", "a"});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::abs(std::stod(rows[i][4])) <= 1e-8);
}

TEST_CASE("run_command: byte-identical outputs") {
    const auto dir = scratch("determinism");
    const auto cfg = write_config(dir, "[params]\nT = 2\n[wage]\nfamily = quadratic\n[oracle]\nintervals = 8\n");
    for (const char* sub : {"solve", "oracle"}) {
        CHECK(run_command({sub, "--config", cfg.string(), "--out", (dir / "a").string()}) == 0);
        CHECK(run_command({sub, "--config", cfg.string(), "--out", (dir / "b").string()}) == 0);
    }
    for (const char* f : {"trajectory.csv", "oracle.csv", "oracle_summary.txt"})
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    CHECK(slurp(dir / "a" / "oracle_summary.txt").find("seed = ") != std::string::npos);
}

TEST_CASE("run_command: verify reports small residuals") {
    const auto dir = scratch("verify");
    const auto cfg = write_config(dir, "[params]\nT = 4\n[wage]\nfamily = quadratic\n");
    CHECK(run_command({"verify", "--config", cfg.string(), "--out", dir.string()}) == 0);
    std::ifstream in(dir / "verify.txt");
    std::string line;
    int fields = 0;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        REQUIRE(eq != std::string::npos);
        const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
        if (key == "passes") {
            CHECK(value == "true");
        } else if (key != "positivity") {
            CHECK(std::stod(value) <= 1e-6);
            ++fields;
        }
    }
    CHECK(fields == 5);
}

TEST_CASE("run_command: sweep keeps failed horizons") {
    const auto dir = scratch("sweep");
    const auto cfg = write_config(dir, "[wage]\nfamily = quadratic\n[solver]\nmax_outer = 1\n");
    CHECK(run_command({"sweep", "--config", cfg.string(), "--out", dir.string(), "--t-min", "1", "--t-max", "3",
                       "--t-steps", "3", "--jobs", "2"}) == 0);
    const auto rows = read_csv(dir / "sweep.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"T", "aT", "lambda1", "XT", "J", "regime", "converged"});
    bool saw_false = false;
    for (std::size_t i = 1; i < rows.size(); ++i) saw_false |= rows[i][6] == "false";
    CHECK(saw_false);
}

TEST_CASE("run_command: extremals scan") {
    const auto dir = scratch("extremals");
    const auto cfg = write_config(dir, "[params]\nT = 2\n[wage]\nfamily = quadratic\n");
    CHECK(run_command({"extremals", "--config", cfg.string(), "--out", dir.string(), "--alpha-grid", "20"}) == 0);
    const auto rows = read_csv(dir / "extremals.csv");
    REQUIRE(rows.size() == 21);
    CHECK(rows[0] == std::vector<std::string>{"alpha", "g_alpha", "root"});
    int roots = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) roots += rows[i][2] == "1";
    CHECK(roots == 1);
}

TEST_CASE("run_command: exit codes") {
    const auto dir = scratch("codes");
    const auto bad = write_config(dir, "[params]\ntheta = 2\n[wage]\nfamily = quadratic\n");
    CHECK(run_command({"solve", "--config", bad.string()}) == 3);
    CHECK(run_command({"solve", "--config", (dir / "missing.cfg").string()}) == 4);
    CHECK(run_command({"solve"}) == 3);
    CHECK(run_command({"frobnicate"}) == 3);

    const auto good = write_config(dir, "[params]\nT = 1\n[wage]\nfamily = quadratic\n");
    std::ofstream(dir / "blocker") << "x";
    CHECK(run_command({"solve", "--config", good.string(), "--out", (dir / "blocker" / "sub").string()}) == 4);

    const auto stuck = write_config(dir, "[params]\nT = 5\n[wage]\nfamily = quadratic\n[solver]\nmax_outer = 1\n");
    CHECK(run_command({"solve", "--config", stuck.string(), "--out", (dir / "stuck").string()}) == 2);
}
