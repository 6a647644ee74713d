#pragma once

#include <stdexcept>
#include <string>

namespace tsdcn {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A forward pass or gradient produced a zero or non-finite quantity.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Model parameters violate their invariants (non-SPD covariance, bad shapes, ...).
class InvalidParams : public Error {
public:
    using Error::Error;
};

/// The constraint Gram matrix is singular; the projection matrix is degenerate.
class RankDeficient : public Error {
public:
    using Error::Error;
};

/// Backtracking exhausted its halvings without a loss decrease.
class StepFailure : public Error {
public:
    using Error::Error;
};

/// A matrix that must have full column rank does not.
class DegenerateMatrix : public Error {
public:
    using Error::Error;
};

/// Data lacks the rank/variance structure a fit requires.
class DegenerateData : public Error {
public:
    using Error::Error;
};

/// An operation received an empty input.
class EmptyInput : public Error {
public:
    using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace tsdcn
