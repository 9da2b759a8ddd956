#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oscmap {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Expression text could not be parsed. `offset` is the byte position of the
/// first offending character.
struct ParseError : Error {
    std::size_t offset;
    ParseError(const std::string& msg, std::size_t off)
        : Error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

/// An expression was evaluated outside the domain of one of its nodes
/// (log/sqrt of a negative value, division by zero, ...).
struct EvalDomainError : Error {
    using Error::Error;
};

/// The phase function has a non-positive first derivative where the
/// construction requires a strictly increasing phase.
struct PhaseNotMonotone : Error {
    double t;
    explicit PhaseNotMonotone(double t_)
        : Error("phase derivative is not positive at t = " + std::to_string(t_)), t(t_) {}
};

/// First derivative below the floor used to guard the Schwarzian division.
struct ZeroFirstDerivative : Error {
    using Error::Error;
};

struct NonpositiveAmplitude : Error {
    using Error::Error;
};

struct GridMismatch : Error {
    using Error::Error;
};

/// A synthesized phase fails dtheta/dx > 0. `x` locates the first violation.
struct MonotonicityViolated : Error {
    double x;
    explicit MonotonicityViolated(double x_)
        : Error("dtheta/dx <= 0 at x = " + std::to_string(x_)), x(x_) {}
};

struct IntegrationFailed : Error {
    using Error::Error;
};

struct StepSizeUnderflow : IntegrationFailed {
    double t;
    explicit StepSizeUnderflow(double t_)
        : IntegrationFailed("step size underflow at t = " + std::to_string(t_)), t(t_) {}
};

struct NonFiniteRhs : IntegrationFailed {
    double t;
    explicit NonFiniteRhs(double t_)
        : IntegrationFailed("non-finite right-hand side at t = " + std::to_string(t_)), t(t_) {}
};

struct FitResidualTooLarge : Error {
    double residual;
    explicit FitResidualTooLarge(double r, const std::string& what_)
        : Error(what_ + " (residual " + std::to_string(r) + ")"), residual(r) {}
};

struct PhaseWindowNotFound : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace oscmap
