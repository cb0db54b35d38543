#pragma once

#include <stdexcept>
#include <string>

namespace bafrcnn {

/// Raised when a value that must be finite is NaN or infinite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an input file or configuration fails validation.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bafrcnn
