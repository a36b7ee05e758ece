#pragma once

#include <stdexcept>
#include <string>

namespace ksme {

/// Invalid model, scenario, or parameter description. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Linear-algebra failure (e.g. a covariance that stays indefinite after
/// jitter escalation). The message carries the diagnostics. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ksme
