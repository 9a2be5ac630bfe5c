#pragma once

#include <stdexcept>
#include <string>

namespace bth {

/// Raised when an input violates a documented precondition. The message
/// starts with the offending field path where one is known.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when integration or spectral analysis cannot produce a result
/// that meets its own accuracy contract.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bth
