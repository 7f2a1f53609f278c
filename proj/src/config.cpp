#include "reloc/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace reloc {

ConfigError::ConfigError(const std::string& what, int line_no)
    : InvalidArgument(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what), line(line_no) {}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, int line) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
        throw ConfigError("expected a number, got '" + text + "'", line);
    return v;
}

long long parse_integer(const std::string& text, int line) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
        throw ConfigError("expected an integer, got '" + text + "'", line);
    return v;
}

int parse_int(const std::string& text, int line) {
    const long long v = parse_integer(text, line);
    if (v < -2147483647LL || v > 2147483647LL) throw ConfigError("integer out of range: " + text, line);
    return static_cast<int>(v);
}

std::vector<double> parse_list(const std::string& text, int line) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), line));
    return out;
}

std::string render_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, int)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
    static const std::map<std::string, std::map<std::string, Setter>> table = [] {
        std::map<std::string, std::map<std::string, Setter>> t;
        auto num = [](double ModelParams::*field) {
            return Setter([field](RunConfig& c, const std::string& v, int line) { c.params.*field = parse_double(v, line); });
        };
        t["params"] = {{"rho", num(&ModelParams::rho)}, {"r", num(&ModelParams::r)},
                       {"theta", num(&ModelParams::theta)}, {"eta", num(&ModelParams::eta)},
                       {"xi", num(&ModelParams::xi)}, {"p", num(&ModelParams::p)},
                       {"T", num(&ModelParams::T)}, {"a0", num(&ModelParams::a0)},
                       {"x0", num(&ModelParams::x0)}};
        t["wage"] = {
            {"family",
             [](RunConfig& c, const std::string& v, int line) {
                 try {
                     c.wage.family = wage_family_from_string(v);
                 } catch (const Error& e) {
                     throw ConfigError(e.what(), line);
                 }
             }},
            {"height", [](RunConfig& c, const std::string& v, int line) { c.wage.height = parse_double(v, line); }},
            {"level", [](RunConfig& c, const std::string& v, int line) { c.wage.level = parse_double(v, line); }},
            {"knots", [](RunConfig& c, const std::string& v, int line) { c.wage.knots = parse_list(v, line); }},
            {"values", [](RunConfig& c, const std::string& v, int line) { c.wage.values = parse_list(v, line); }},
            {"blend_width",
             [](RunConfig& c, const std::string& v, int line) { c.wage.blend_width = parse_double(v, line); }},
        };
        t["solver"] = {
            {"alpha_tol", [](RunConfig& c, const std::string& v, int l) { c.solver.alpha_tol = parse_double(v, l); }},
            {"lambda_tol", [](RunConfig& c, const std::string& v, int l) { c.solver.lambda_tol = parse_double(v, l); }},
            {"damping", [](RunConfig& c, const std::string& v, int l) { c.solver.damping = parse_double(v, l); }},
            {"max_outer", [](RunConfig& c, const std::string& v, int l) { c.solver.max_outer = parse_int(v, l); }},
            {"grid_points", [](RunConfig& c, const std::string& v, int l) { c.solver.grid_points = parse_int(v, l); }},
            {"n_steps", [](RunConfig& c, const std::string& v, int l) { c.solver.n_steps = parse_int(v, l); }},
            {"outer",
             [](RunConfig& c, const std::string& v, int l) {
                 try {
                     c.solver.outer = outer_method_from_string(v);
                 } catch (const Error& e) {
                     throw ConfigError(e.what(), l);
                 }
             }},
            {"segment_length",
             [](RunConfig& c, const std::string& v, int l) { c.solver.segment_length = parse_double(v, l); }},
            {"fallback_speed_cap",
             [](RunConfig& c, const std::string& v, int l) { c.solver.fallback_speed_cap = parse_double(v, l); }},
        };
        t["oracle"] = {
            {"intervals", [](RunConfig& c, const std::string& v, int l) { c.oracle.intervals = parse_int(v, l); }},
            {"seed",
             [](RunConfig& c, const std::string& v, int l) {
                 const long long s = parse_integer(v, l);
                 if (s < 0) throw ConfigError("seed must be nonnegative", l);
                 c.oracle.seed = static_cast<std::uint64_t>(s);
             }},
            {"max_iterations",
             [](RunConfig& c, const std::string& v, int l) { c.oracle.max_iterations = parse_int(v, l); }},
            {"gradient_tol",
             [](RunConfig& c, const std::string& v, int l) { c.oracle.gradient_tol = parse_double(v, l); }},
            {"resolution", [](RunConfig& c, const std::string& v, int l) { c.oracle.resolution = parse_int(v, l); }},
            {"penalty_rounds",
             [](RunConfig& c, const std::string& v, int l) { c.oracle.penalty_rounds = parse_int(v, l); }},
            {"penalty_initial",
             [](RunConfig& c, const std::string& v, int l) { c.oracle.penalty_initial = parse_double(v, l); }},
        };
        t["output"] = {{"dir", [](RunConfig& c, const std::string& v, int l) {
                            if (v.empty()) throw ConfigError("output dir must not be empty", l);
                            c.output_dir = v;
                        }}};
        return t;
    }();
    return table;
}

}  // namespace

void RunConfig::validate() const {
    try {
        params.validate();
        solver.validate();
        oracle.validate();
        WageProfile profile(wage);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what(), 0);
    }
}

RunConfig parse_config(const std::string& text) {
    RunConfig config;
    std::string section;
    std::set<std::string> seen;
    bool family_given = false;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("unterminated section header", line);
            section = trim(s.substr(1, s.size() - 2));
            if (!setters().count(section)) throw ConfigError("unknown section [" + section + "]", line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        if (section.empty()) throw ConfigError("key outside any section", line);
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const auto& keys = setters().at(section);
        const auto it = keys.find(key);
        if (it == keys.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line);
        if (!seen.insert(section + "." + key).second)
            throw ConfigError("duplicate key '" + key + "' in [" + section + "]", line);
        it->second(config, value, line);
        if (section == "wage" && key == "family") family_given = true;
    }
    if (!family_given) throw ConfigError("[wage] requires key 'family' (quadratic, constant or spline)", 0);
    config.validate();
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path, 0);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string render_config(const RunConfig& c) {
    std::ostringstream out;
    const auto& p = c.params;
    out << "[params]\n"
        << "rho = " << format_double(p.rho) << "\nr = " << format_double(p.r)
        << "\ntheta = " << format_double(p.theta) << "\neta = " << format_double(p.eta)
        << "\nxi = " << format_double(p.xi) << "\np = " << format_double(p.p) << "\nT = " << format_double(p.T)
        << "\na0 = " << format_double(p.a0) << "\nx0 = " << format_double(p.x0) << "\n\n";
    out << "[wage]\nfamily = " << to_string(c.wage.family) << "\nheight = " << format_double(c.wage.height)
        << "\nlevel = " << format_double(c.wage.level) << "\nblend_width = " << format_double(c.wage.blend_width)
        << "\n";
    if (!c.wage.knots.empty()) out << "knots = " << render_list(c.wage.knots) << "\n";
    if (!c.wage.values.empty()) out << "values = " << render_list(c.wage.values) << "\n";
    const auto& s = c.solver;
    out << "\n[solver]\nalpha_tol = " << format_double(s.alpha_tol) << "\nlambda_tol = " << format_double(s.lambda_tol)
        << "\ndamping = " << format_double(s.damping) << "\nmax_outer = " << s.max_outer
        << "\ngrid_points = " << s.grid_points << "\nn_steps = " << s.n_steps << "\nouter = " << to_string(s.outer)
        << "\nfallback_speed_cap = " << format_double(s.fallback_speed_cap)
        << "\nsegment_length = " << format_double(s.segment_length) << "\n";
    const auto& o = c.oracle;
    out << "\n[oracle]\nintervals = " << o.intervals << "\nseed = " << o.seed
        << "\nmax_iterations = " << o.max_iterations << "\ngradient_tol = " << format_double(o.gradient_tol)
        << "\nresolution = " << o.resolution << "\npenalty_rounds = " << o.penalty_rounds
        << "\npenalty_initial = " << format_double(o.penalty_initial) << "\n";
    out << "\n[output]\ndir = " << c.output_dir << "\n";
    return out.str();
}

}  // namespace reloc
