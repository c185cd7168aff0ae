#pragma once

#include <stdexcept>
#include <string>

namespace spadsim {

/// Argument outside the validity range of a model (temperature, wavelength, field sign).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Structurally invalid input: a layer stack, a parameter set, a sweep spec.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The ionization integral never reaches unity below the configured bias ceiling.
class NoBreakdownError : public std::runtime_error {
public:
    NoBreakdownError(double ceiling_v, double integral_at_ceiling)
        : std::runtime_error("no breakdown below " + std::to_string(ceiling_v) +
                             " V (ionization integral " + std::to_string(integral_at_ceiling) + ")"),
          ceiling_v_(ceiling_v),
          integral_at_ceiling_(integral_at_ceiling) {}

    double ceiling_v() const noexcept { return ceiling_v_; }
    double integral_at_ceiling() const noexcept { return integral_at_ceiling_; }

private:
    double ceiling_v_;
    double integral_at_ceiling_;
};

/// An iterative solver stopped without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + " after " +
                             std::to_string(iterations) + " iterations)"),
          residual_(residual),
          iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Unreadable or inconsistent configuration document.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spadsim
