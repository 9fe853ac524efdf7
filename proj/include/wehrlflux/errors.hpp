#pragma once

#include <stdexcept>
#include <string>

namespace wehrlflux {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input (dimensions, parameters, configuration values).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InvalidDimension : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class DimensionMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// The Fock cutoff cannot represent the requested state; carries an estimate
/// of the cutoff that would.
class TruncationInadequate : public Error {
public:
    TruncationInadequate(const std::string& what, int required_n_max)
        : Error(what), required_n_max_(required_n_max) {}
    int required_n_max() const noexcept { return required_n_max_; }

private:
    int required_n_max_;
};

/// Base for failures of a numerical method (as opposed to bad input).
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateSteadyState : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StepSizeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class MassDeficit : public NumericalError {
public:
    MassDeficit(const std::string& what, double mass) : NumericalError(what), mass_(mass) {}
    double mass() const noexcept { return mass_; }

private:
    double mass_;
};

class QuadratureFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularExpansion : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularBranch : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UnstableSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InvalidCovariance : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InsufficientPoints : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Run configuration could not be parsed or validated.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0) : Error(what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Throws InvalidArgument unless `value` is finite.
void require_finite(double value, const char* name);

}  // namespace wehrlflux
