#pragma once

#include <stdexcept>
#include <string>

namespace bip {

/// Bad input: dimension mismatch, non-finite entries, invalid settings.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown inside the sampler (factorization failure, NaN).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bip
