#include "reloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace reloc {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

bool finite(double v) { return std::isfinite(v); }

// Quintic matching (value, slope, curvature) at both ends of [0, L].
std::array<double, 6> quintic_hermite(double L, const WageSample& from, const WageSample& to) {
    const double d0 = to.w - (from.w + from.dw * L + 0.5 * from.d2w * L * L);
    const double d1 = to.dw - (from.dw + from.d2w * L);
    const double d2 = to.d2w - from.d2w;
    const double L2 = L * L, L3 = L2 * L;
    return {from.w,
            from.dw,
            0.5 * from.d2w,
            (20.0 * d0 - 8.0 * d1 * L + d2 * L2) / (2.0 * L3),
            (-30.0 * d0 + 14.0 * d1 * L - 2.0 * d2 * L2) / (2.0 * L3 * L),
            (12.0 * d0 - 6.0 * d1 * L + d2 * L2) / (2.0 * L3 * L2)};
}

}  // namespace

void ModelParams::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw InvalidArgument(msg);
    };
    for (double v : {rho, r, theta, eta, xi, p, T, a0, x0})
        require(finite(v), "parameters must be finite");
    require(theta > 0.0 && theta < 1.0, "theta ∈ (0,1)");
    require(rho > 0.0, "rho > 0");
    require(r > 0.0, "r > 0");
    require(p > 0.0, "p > 0");
    require(T > 0.0, "T > 0");
    require(eta >= 0.0, "eta >= 0");
    require(xi >= 0.0, "xi >= 0");
    require(eta + xi > 0.0, "eta + xi > 0");
    require(a0 >= 0.0, "a0 >= 0");
    require(x0 >= 0.0 && x0 <= 1.0, "x0 ∈ [0,1]");
}

std::string to_string(WageFamily family) {
    switch (family) {
        case WageFamily::quadratic: return "quadratic";
        case WageFamily::constant: return "constant";
        case WageFamily::spline: return "spline";
    }
    return "unknown";
}

WageFamily wage_family_from_string(const std::string& name) {
    if (name == "quadratic") return WageFamily::quadratic;
    if (name == "constant") return WageFamily::constant;
    if (name == "spline") return WageFamily::spline;
    throw InvalidArgument("unknown wage family '" + name + "' (expected quadratic, constant or spline)");
}

WageProfile::WageProfile(const WageSpec& spec) : spec_(spec) {
    build();
    certify();
}

WageProfile WageProfile::quadratic(double height) {
    WageSpec spec;
    spec.family = WageFamily::quadratic;
    spec.height = height;
    return WageProfile(spec);
}

WageProfile WageProfile::constant(double level) {
    WageSpec spec;
    spec.family = WageFamily::constant;
    spec.level = level;
    return WageProfile(spec);
}

WageProfile WageProfile::spline(std::vector<double> knots, std::vector<double> values) {
    WageSpec spec;
    spec.family = WageFamily::spline;
    spec.knots = std::move(knots);
    spec.values = std::move(values);
    return WageProfile(spec);
}

WageSample WageProfile::eval_piece(const Piece& piece, double x) const {
    const double s = x - piece.lo;
    const auto& c = piece.c;
    const double w = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
    const double dw = c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
    const double d2w = 2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]));
    return {w, dw, d2w};
}

WageSample WageProfile::at(double x) const {
    if (spec_.family == WageFamily::constant) return {spec_.level, 0.0, 0.0};
    if (x <= pieces_.front().lo || x >= pieces_.back().hi) return {plateau_, 0.0, 0.0};
    // Pieces are few (3 for the quadratic); linear scan beats a binary search here.
    for (const auto& piece : pieces_)
        if (x < piece.hi) return eval_piece(piece, x);
    return eval_piece(pieces_.back(), x);
}

void WageProfile::build() {
    const double delta = spec_.blend_width;
    if (spec_.family == WageFamily::constant) {
        if (!finite(spec_.level)) throw InvalidArgument("constant wage level must be finite");
        sup_abs_w_ = std::abs(spec_.level);
        sup_abs_dw_ = 0.0;
        peak_value_ = spec_.level;
        peak_location_ = 0.5;
        concave_on_unit_ = true;
        return;
    }
    if (!(delta > 0.0) || !finite(delta)) throw InvalidArgument("blend_width > 0");

    std::vector<Piece> interior;
    if (spec_.family == WageFamily::quadratic) {
        const double h = spec_.height;
        if (!(h > 0.0) || !finite(h)) throw InvalidArgument("quadratic height > 0");
        interior.push_back({0.0, 1.0, {0.0, h, -h, 0.0, 0.0, 0.0}});
    } else {
        const auto& xs = spec_.knots;
        const auto& ys = spec_.values;
        if (xs.size() < 3 || xs.size() != ys.size())
            throw InvalidArgument("spline needs matching knots/values with at least 3 points");
        if (xs.front() != 0.0 || xs.back() != 1.0)
            throw InvalidArgument("spline knots must start at 0 and end at 1");
        if (ys.front() != 0.0 || ys.back() != 0.0)
            throw InvalidArgument("spline values must be 0 at x = 0 and x = 1");
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (!(xs[i] > xs[i - 1])) throw InvalidArgument("spline knots must be strictly increasing");
        for (std::size_t i = 1; i + 1 < ys.size(); ++i)
            if (!(ys[i] > 0.0)) throw InvalidArgument("spline interior values must be > 0");

        // Natural cubic spline: solve for knot curvatures M, M_0 = M_n = 0.
        const std::size_t n = xs.size() - 1;
        std::vector<double> h(n), M(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) h[i] = xs[i + 1] - xs[i];
        if (n >= 2) {
            std::vector<double> diag(n - 1), upper(n - 1), rhs(n - 1);
            for (std::size_t i = 1; i < n; ++i) {
                diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
                upper[i - 1] = h[i];
                rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
            }
            // Thomas algorithm; the sub-diagonal equals h[i-1].
            for (std::size_t k = 1; k < n - 1; ++k) {
                const double m = h[k] / diag[k - 1];
                diag[k] -= m * upper[k - 1];
                rhs[k] -= m * rhs[k - 1];
            }
            M[n - 1] = rhs[n - 2] / diag[n - 2];
            for (std::size_t k = n - 2; k >= 1; --k) M[k] = (rhs[k - 1] - upper[k - 1] * M[k + 1]) / diag[k - 1];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double b = (ys[i + 1] - ys[i]) / h[i] - h[i] * (2.0 * M[i] + M[i + 1]) / 6.0;
            interior.push_back({xs[i], xs[i + 1], {ys[i], b, 0.5 * M[i], (M[i + 1] - M[i]) / (6.0 * h[i]), 0.0, 0.0}});
        }
    }

    // Peak on [0,1]: dense scan, then bisection on the slope sign.
    pieces_ = interior;
    plateau_ = 0.0;
    auto eval_interior = [&](double x) {
        for (const auto& piece : interior)
            if (x <= piece.hi) return eval_piece(piece, x);
        return eval_piece(interior.back(), x);
    };
    if (spec_.family == WageFamily::quadratic) {
        peak_location_ = 0.5;
    } else {
        const int samples = 20000;
        int best = 0;
        double best_w = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= samples; ++i) {
            const double w = eval_interior(static_cast<double>(i) / samples).w;
            if (w > best_w) best_w = w, best = i;
        }
        double lo = std::max(0.0, (best - 1.0) / samples), hi = std::min(1.0, (best + 1.0) / samples);
        if (eval_interior(lo).dw > 0.0 && eval_interior(hi).dw < 0.0) {
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                (eval_interior(mid).dw > 0.0 ? lo : hi) = mid;
            }
        }
        peak_location_ = 0.5 * (lo + hi);
    }
    peak_value_ = eval_interior(peak_location_).w;
    plateau_ = -peak_value_;

    const WageSample plateau{plateau_, 0.0, 0.0};
    const WageSample left_end = eval_interior(0.0);
    const WageSample right_end = eval_piece(interior.back(), 1.0);
    pieces_.clear();
    pieces_.push_back({-delta, 0.0, quintic_hermite(delta, plateau, left_end)});
    for (const auto& piece : interior) pieces_.push_back(piece);
    pieces_.push_back({1.0, 1.0 + delta, quintic_hermite(delta, right_end, plateau)});

    // Sup norms over the blend window; the plateau outside adds only |A|.
    const int samples = 40000;
    sup_abs_w_ = std::abs(plateau_);
    sup_abs_dw_ = 0.0;
    concave_on_unit_ = true;
    for (int i = 0; i <= samples; ++i) {
        const double x = -delta + (1.0 + 2.0 * delta) * i / samples;
        const WageSample s = at(x);
        sup_abs_w_ = std::max(sup_abs_w_, std::abs(s.w));
        sup_abs_dw_ = std::max(sup_abs_dw_, std::abs(s.dw));
        if (x >= 0.0 && x <= 1.0 && s.d2w > 0.0) concave_on_unit_ = false;
    }
}

std::vector<double> WageProfile::knots() const {
    std::vector<double> out;
    for (const auto& piece : pieces_) out.push_back(piece.lo);
    if (!pieces_.empty()) out.push_back(pieces_.back().hi);
    return out;
}

double WageProfile::continuity_defect() const {
    if (spec_.family == WageFamily::constant) return 0.0;
    const WageSample plateau{plateau_, 0.0, 0.0};
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); };
    auto compare = [&](const WageSample& l, const WageSample& r) {
        return std::max({rel(l.w, r.w), rel(l.dw, r.dw), rel(l.d2w, r.d2w)});
    };
    double worst = compare(plateau, eval_piece(pieces_.front(), pieces_.front().lo));
    for (std::size_t i = 0; i + 1 < pieces_.size(); ++i)
        worst = std::max(worst, compare(eval_piece(pieces_[i], pieces_[i].hi), eval_piece(pieces_[i + 1], pieces_[i + 1].lo)));
    worst = std::max(worst, compare(eval_piece(pieces_.back(), pieces_.back().hi), plateau));
    return worst;
}

void WageProfile::certify() const {
    if (spec_.family == WageFamily::constant) return;
    const double defect = continuity_defect();
    if (defect > 1e-6) throw InvalidArgument("wage profile is not C2 at a knot (defect " + fmt(defect) + ")");

    const double delta = spec_.blend_width;
    const int samples = 2000;
    for (int i = 1; i < samples; ++i) {
        const double x = static_cast<double>(i) / samples;
        if (!(at(x).w > 0.0)) throw InvalidArgument("wage must be > 0 on (0,1); fails at x = " + fmt(x));
    }
    for (int i = 1; i <= samples; ++i) {
        const double s = delta * i / samples;
        const WageSample left = at(-s), right = at(1.0 + s);
        if (!(left.w < 0.0) || !(right.w < 0.0))
            throw InvalidArgument("wage must be < 0 outside [0,1]; fails at distance " + fmt(s));
        if (i < samples && (!(left.dw > 0.0) || !(right.dw < 0.0)))
            throw InvalidArgument("wage slope must point into [0,1] on the blend; fails at distance " + fmt(s));
    }
    if (!(at(0.0).dw > 0.0) || !(at(1.0).dw < 0.0))
        throw InvalidArgument("wage slope must be > 0 at x = 0 and < 0 at x = 1");
}

WageSample wage_eval(const WageProfile& profile, double x) {
    if (!(x >= profile.window_lo() && x <= profile.window_hi()))
        throw OutOfWindow("wage evaluated outside [" + fmt(profile.window_lo()) + ", " + fmt(profile.window_hi()) +
                          "] at x = " + fmt(x));
    return profile.at(x);
}

double consumption_cap_bound(const ModelParams& params, double sup_abs_w, double mu) {
    const double annuity = (1.0 - std::exp(-params.r * params.T)) / params.r;
    return std::max(1.0, std::pow(mu, 1.0 / params.theta)) * (params.a0 + params.T * sup_abs_w) /
           (params.p * annuity);
}

ControlCaps control_caps_from_bounds(const ModelParams& params, double sup_abs_w, double sup_abs_dw,
                                     double fallback_z) {
    ControlCaps caps;
    caps.mu = std::exp(std::abs(params.r - params.rho) * params.T);
    // The budget constraint bounds c itself by the bound; the θ-th-root form is also
    // kept satisfied. The two differ whenever the bound is below one.
    const double bound = consumption_cap_bound(params, sup_abs_w, caps.mu);
    caps.C = kCapSafetyFactor * std::max(bound, std::pow(bound, 1.0 / params.theta));
    if (params.xi > 0.0) {
        caps.Z = kCapSafetyFactor * params.T * sup_abs_dw * std::exp(params.r * params.T) / (2.0 * params.xi);
        caps.z_from_bound = true;
    } else {
        caps.Z = fallback_z;
        caps.z_from_bound = false;
    }
    return caps;
}

ControlCaps compute_control_caps(const ModelParams& params, const WageProfile& profile, double fallback_z) {
    params.validate();
    return control_caps_from_bounds(params, profile.sup_abs_w(), profile.sup_abs_dw(), fallback_z);
}

Regime classify_regime(const ModelParams& params) {
    Regime regime;
    regime.indicator = params.rho - params.r * (1.0 - params.theta);
    if (std::abs(regime.indicator) <= kRegimeTolerance) {
        regime.tag = RegimeTag::Boundary;
    } else if (regime.indicator > 0.0) {
        regime.tag = RegimeTag::Positive;
        const double gap = params.rho - params.r;
        if (std::abs(gap) <= kRegimeTolerance)
            regime.subcase = PositiveSubcase::equal_r;
        else
            regime.subcase = gap < 0.0 ? PositiveSubcase::below_r : PositiveSubcase::above_r;
    } else {
        regime.tag = RegimeTag::Negative;
    }
    return regime;
}

std::string to_string(RegimeTag tag) {
    switch (tag) {
        case RegimeTag::Positive: return "Positive";
        case RegimeTag::Negative: return "Negative";
        case RegimeTag::Boundary: return "Boundary";
    }
    return "unknown";
}

std::string to_string(PositiveSubcase subcase) {
    switch (subcase) {
        case PositiveSubcase::none: return "none";
        case PositiveSubcase::below_r: return "rho<r";
        case PositiveSubcase::equal_r: return "rho=r";
        case PositiveSubcase::above_r: return "rho>r";
    }
    return "unknown";
}

}  // namespace reloc
