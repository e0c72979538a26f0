#pragma once

#include <stdexcept>
#include <string>

namespace pdeopt {

/// Invalid sizes, ranges, or keys in a configuration or argument.
class InvalidConfigError : public std::runtime_error {
public:
    explicit InvalidConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Diffusivity failed the lower-bound requirement somewhere in the domain.
class CoercivityError : public std::runtime_error {
public:
    explicit CoercivityError(const std::string& what) : std::runtime_error(what) {}
};

/// Two fields live on different grids (or have inconsistent shapes).
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// A linear solve failed or exceeded its residual contract.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// A theorem hypothesis (e.g. a step-size restriction) is violated.
class HypothesisError : public std::runtime_error {
public:
    explicit HypothesisError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pdeopt
