#pragma once

#include <stdexcept>
#include <string>

namespace frakdiff {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed argument (index out of range, shape mismatch, empty list).
class InputError : public Error {
public:
    using Error::Error;
};

/// Parameter outside its admissible range (e.g. alpha not in (0,2]).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Request outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Stated hypothesis of an estimate or construction not met.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Dense or tensor size above the configured guard.
class SizeGuardError : public Error {
public:
    using Error::Error;
};

/// Operation not defined for the given kind of input.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Adaptive integrator could not keep the step size above its floor.
class StiffnessError : public Error {
public:
    StiffnessError(const std::string& what, double t, double h)
        : Error(what + " (t=" + std::to_string(t) + ", h=" + std::to_string(h) + ")"), t_(t), h_(h) {}

    double time() const noexcept { return t_; }
    double step() const noexcept { return h_; }

private:
    double t_;
    double h_;
};

/// Solution norm left the admissible envelope of a nonlinear solve.
class BlowUpError : public Error {
public:
    using Error::Error;
};

/// Experiment configuration failed validation.
class SchemaError : public Error {
public:
    using Error::Error;
};

}  // namespace frakdiff
