#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cryoamp {

// Input/config problems map to exit status 2 in the CLI, numerical ones to 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    ParseError(std::size_t line, const std::string& what)
        : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class RangeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class FitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : NumericalError(what + " (last residual " + std::to_string(last_residual) + ")"),
          last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

namespace detail {

inline void require_positive(double value, const char* name) {
    if (!(value > 0.0)) {
        throw DomainError(std::string(name) + " must be positive");
    }
}

}  // namespace detail

}  // namespace cryoamp
