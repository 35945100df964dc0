#pragma once

#include <stdexcept>
#include <string>

namespace hom {

/// Input or configuration that violates a documented invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// No part of the drive cycle puts the line inside the filter band.
class EmptyGateError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// The filter band is hit during more than one disjoint interval per cycle.
class MultipleGatesError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Arguments outside the physical domain of a closed-form relation.
class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A numerical routine failed to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    /// Error estimate at the point of failure.
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace hom
