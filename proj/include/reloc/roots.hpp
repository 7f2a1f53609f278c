#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "reloc/errors.hpp"

namespace reloc {

struct RootResult {
    double x = 0.0;
    double fx = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Brent's method on a sign-changing bracket [a, b] with known end values.
/// Stops when |f| <= ftol or the bracket shrinks below xtol (plus a few ulps).
template <typename F>
RootResult brent_root(F&& f, double a, double b, double fa, double fb, double ftol, double xtol,
                      int max_evaluations = 200) {
    RootResult out;
    if (fa == 0.0) return {a, fa, 0, true};
    if (fb == 0.0) return {b, fb, 0, true};
    if ((fa > 0.0) == (fb > 0.0)) throw InvalidArgument("brent_root: bracket has no sign change");

    double c = a, fc = fa, d = b - a, e = d;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (;;) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol = 2.0 * eps * std::abs(b) + 0.5 * xtol;
        const double m = 0.5 * (c - b);
        if (std::abs(fb) <= ftol || std::abs(m) <= tol || fb == 0.0) {
            out.x = b;
            out.fx = fb;
            out.converged = std::abs(fb) <= ftol || std::abs(m) <= tol;
            return out;
        }
        if (out.evaluations >= max_evaluations) {
            out.x = b;
            out.fx = fb;
            return out;
        }
        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0)
                q = -q;
            else
                p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        ++out.evaluations;
    }
}

}  // namespace reloc
