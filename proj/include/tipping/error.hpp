#pragma once

#include <stdexcept>
#include <string>

namespace tipping {

// Base class; every library failure derives from it so the CLI can map to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input (parameters out of range, malformed config).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Unreadable or inconsistent configuration (unknown keys, wrong types, missing file).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Evaluation outside the domain of a function (x < m, m above the tabulated range...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Root not bracketed, bracket expansion exhausted.
class RangeError : public Error {
public:
    RangeError(const std::string& what, double lo, double hi, double f_lo, double f_hi)
        : Error(what), lo(lo), hi(hi), f_lo(f_lo), f_hi(f_hi) {}
    double lo, hi, f_lo, f_hi;
};

// Integrator collapse, non-convergence, invariant broken beyond tolerance.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace tipping
