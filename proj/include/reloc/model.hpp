#pragma once

// Model primitives: economic parameters, wage distributions on the real line,
// control caps and the asymptotic regime of the terminal-asset path.

#include <array>
#include <string>
#include <vector>

#include "reloc/errors.hpp"

namespace reloc {

struct ModelParams {
    double rho = 0.05;    // time preference
    double r = 0.05;      // interest rate
    double theta = 0.5;   // utility curvature, in (0,1)
    double eta = 1.0;     // relocation disutility weight
    double xi = 1.0;      // monetary relocation cost weight
    double p = 1.0;       // consumption price
    double T = 10.0;      // horizon
    double a0 = 1.0;      // initial assets
    double x0 = 0.25;     // initial location

    /// Throws InvalidArgument naming the first violated invariant.
    void validate() const;

    bool operator==(const ModelParams&) const = default;
};

enum class WageFamily { quadratic, constant, spline };

std::string to_string(WageFamily family);
WageFamily wage_family_from_string(const std::string& name);

/// Value, slope and curvature of the wage at a point.
struct WageSample {
    double w = 0.0;
    double dw = 0.0;
    double d2w = 0.0;
};

/// Specification a WageProfile is built from. Kept separately so configs can
/// be rendered back verbatim.
struct WageSpec {
    WageFamily family = WageFamily::quadratic;
    double height = 1.0;              // quadratic: w = height * x (1 - x)
    double level = 0.25;              // constant: w = level
    std::vector<double> knots;        // spline: abscissae, 0 = first < ... < last = 1
    std::vector<double> values;       // spline: ordinates, zero at both ends
    double blend_width = 0.25;        // width of the extension blend outside [0,1]

    bool operator==(const WageSpec&) const = default;
};

/// A C² bounded wage distribution on the real line.
///
/// Inside [0,1] the wage is the family's polynomial (a natural cubic spline for
/// tabulated data). On [-δ, 0) and (1, 1+δ] a quintic Hermite blend joins it
/// to the constant plateau -A, A = max over [0,1] of w. Beyond the blends the
/// wage is the plateau. The constant family is constant everywhere.
class WageProfile {
public:
    explicit WageProfile(const WageSpec& spec);

    static WageProfile quadratic(double height = 1.0);
    static WageProfile constant(double level);
    static WageProfile spline(std::vector<double> knots, std::vector<double> values);

    /// Unchecked evaluation; defined on the whole line.
    WageSample at(double x) const;

    const WageSpec& spec() const { return spec_; }
    WageFamily family() const { return spec_.family; }

    /// Declared evaluation window [window_lo, window_hi].
    double window_lo() const { return -1.0; }
    double window_hi() const { return 2.0; }

    double sup_abs_w() const { return sup_abs_w_; }
    double sup_abs_dw() const { return sup_abs_dw_; }
    double max_on_unit() const { return peak_value_; }
    /// argmax of w over [0,1].
    double peak_location() const { return peak_location_; }
    /// True when w'' <= 0 on every sampled point of [0,1].
    bool concave_on_unit() const { return concave_on_unit_; }

    /// Piece boundaries where one-sided derivatives are compared.
    std::vector<double> knots() const;

    /// Largest relative mismatch of (w, w', w'') between the two pieces meeting
    /// at any knot. Relative to max(1, |value|).
    double continuity_defect() const;

private:
    struct Piece {
        double lo;
        double hi;
        std::array<double, 6> c;  // polynomial in (x - lo)
    };

    WageSample eval_piece(const Piece& piece, double x) const;
    void build();
    void certify() const;

    WageSpec spec_;
    std::vector<Piece> pieces_;
    double plateau_ = 0.0;
    double sup_abs_w_ = 0.0;
    double sup_abs_dw_ = 0.0;
    double peak_value_ = 0.0;
    double peak_location_ = 0.0;
    bool concave_on_unit_ = false;
};

/// Checked evaluation: throws OutOfWindow outside the declared window.
WageSample wage_eval(const WageProfile& profile, double x);

struct ControlCaps {
    double C = 0.0;
    double Z = 0.0;
    double mu = 1.0;
    /// False when xi = 0 and Z came from the configured fallback.
    bool z_from_bound = true;
};

inline constexpr double kCapSafetyFactor = 1.05;

/// Caps from the closed-form lower bounds, given sup|w| and sup|w'|.
/// When xi = 0, Z is set to `fallback_z` and z_from_bound is false.
ControlCaps control_caps_from_bounds(const ModelParams& params, double sup_abs_w,
                                     double sup_abs_dw, double fallback_z = 0.0);

ControlCaps compute_control_caps(const ModelParams& params, const WageProfile& profile,
                                 double fallback_z = 0.0);

/// Right-hand side of the consumption-cap bound (before the θ-th root).
double consumption_cap_bound(const ModelParams& params, double sup_abs_w, double mu);

enum class RegimeTag { Positive, Negative, Boundary };
enum class PositiveSubcase { none, below_r, equal_r, above_r };

struct Regime {
    RegimeTag tag = RegimeTag::Boundary;
    PositiveSubcase subcase = PositiveSubcase::none;
    double indicator = 0.0;  // rho - r (1 - theta)

    bool operator==(const Regime&) const = default;
};

inline constexpr double kRegimeTolerance = 1e-12;

Regime classify_regime(const ModelParams& params);
std::string to_string(RegimeTag tag);
std::string to_string(PositiveSubcase subcase);

}  // namespace reloc
