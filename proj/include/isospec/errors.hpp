#pragma once

#include <stdexcept>
#include <string>

namespace isospec {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A numeric procedure did not reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double bound) : Error(what), bound_(bound) {}
    double bound() const noexcept { return bound_; }

private:
    double bound_;
};

// Covariance whose Legendre coefficients are materially negative.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(const std::string& what, int degree, double value)
        : Error(what), degree_(degree), value_(value) {}
    int degree() const noexcept { return degree_; }
    double value() const noexcept { return value_; }

private:
    int degree_;
    double value_;
};

// Malformed configuration or descriptor.
class ConfigError : public Error {
public:
    using Error::Error;
};

// File system failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace isospec
