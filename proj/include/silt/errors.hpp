#pragma once

#include <stdexcept>
#include <string>

namespace silt {

// Process exit codes surfaced by the command-line front end.
enum class ExitCode : int {
    ok = 0,
    config = 2,
    regime = 3,
    criterion = 4,
    io = 5,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::config; }
};

// Invalid arguments or configuration values.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// (H, d) outside the regime an operation is defined for.
class RegimeError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
    ExitCode exit_code() const noexcept override { return ExitCode::regime; }
};

class IoError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

// Numerical quantity outside its admissible domain; signals an upstream bug.
class DomainError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::criterion; }
};

class RangeError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::criterion; }
};

// Circulant embedding produced a negative eigenvalue beyond tolerance.
class EmbeddingError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::criterion; }
};

} // namespace silt
