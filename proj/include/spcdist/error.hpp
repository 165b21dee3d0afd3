#pragma once

#include <stdexcept>
#include <string>

namespace spcdist {

/// Input that violates a data-model invariant (bad CSV, short subject,
/// mismatched grids, out-of-range arguments).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation that cannot proceed numerically (singular band system,
/// degenerate REML profile).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spcdist
