#pragma once

#include <stdexcept>
#include <string>

namespace semibvm {

/// Raised when a linear-algebra step fails even after jitter escalation, or a
/// sampler exhausts its attempt budget.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed or out-of-range experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace semibvm
