#pragma once

#include <stdexcept>
#include <string>

namespace soilvox {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data, violated precondition or unreadable file.
class InputError : public Error {
public:
    using Error::Error;
};

/// Explicit time step exceeds the nonnegativity bound.
class StabilityError : public Error {
public:
    using Error::Error;
};

/// Iterative solver hit its iteration cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations, double residual)
        : Error(what), iterations_(iterations), residual_(residual) {}

    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

}  // namespace soilvox
