#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace reloc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter or profile invariant violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// F(t) dropped below F_min in a relocation-rule denominator.
class SingularDenominator : public Error {
public:
    using Error::Error;
};

/// Non-finite state produced during integration.
class Divergence : public Error {
public:
    using Error::Error;
};

/// Wage evaluated outside the declared window.
class OutOfWindow : public Error {
public:
    using Error::Error;
};

/// Bequest utility requested at a(T) <= 0.
class InfeasibleTerminalAssets : public Error {
public:
    using Error::Error;
};

/// Shooting bracket without a sign change; carries the sampled residuals.
class NoRoot : public Error {
public:
    NoRoot(const std::string& what, std::vector<double> alphas, std::vector<double> residuals)
        : Error(what), alphas(std::move(alphas)), residuals(std::move(residuals)) {}
    std::vector<double> alphas;
    std::vector<double> residuals;
};

/// An iterative solve hit its iteration cap.
class NonConvergence : public Error {
public:
    using Error::Error;
};

}  // namespace reloc
