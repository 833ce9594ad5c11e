#pragma once

#include <stdexcept>
#include <string>

namespace narrinf {

/// Process exit codes shared by every command-line entry point.
enum class ExitCode : int {
    kOk = 0,
    kInput = 2,
    kEmpty = 3,
    kConvergence = 4,
    kUnsupported = 5,
    kSingular = 6,
};

/// Base class for all library errors. Carries the exit code the CLI maps it to.
class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Malformed input, dimension mismatch, invalid configuration.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ExitCode::kInput, what) {}
};

/// A stage produced nothing to work with.
class EmptyError : public Error {
public:
    explicit EmptyError(const std::string& what) : Error(ExitCode::kEmpty, what) {}
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(ExitCode::kConvergence, what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Configuration outside what a closed-form routine supports.
class UnsupportedError : public Error {
public:
    explicit UnsupportedError(const std::string& what) : Error(ExitCode::kUnsupported, what) {}
};

class SingularDesignError : public Error {
public:
    explicit SingularDesignError(const std::string& what) : Error(ExitCode::kSingular, what) {}
};

}  // namespace narrinf
