#pragma once

#include <stdexcept>
#include <string>

namespace knockoff {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user-supplied configuration: out-of-range levels, sizes, unknown tags.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Base for failures caused by the numbers themselves rather than the config.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DimensionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Zero columns, non positive-definite Gram matrices and similar.
class DegenerateInputError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularDesignError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The knockoff s vector does not admit a valid construction.
class InvalidSError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PairingError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateFitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double last_change)
        : NumericalError(what + " (last max change " + std::to_string(last_change) + ")"),
          last_change_(last_change) {}

    double last_change() const noexcept { return last_change_; }

private:
    double last_change_;
};

/// Malformed input files; carries the 1-based row and column of the bad cell.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t col)
        : ConfigError(what), row_(row), col_(col) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

}  // namespace knockoff
