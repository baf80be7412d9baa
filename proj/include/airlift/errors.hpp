#pragma once

#include <stdexcept>
#include <string>

namespace airlift {

/// Scenario or waypoint input that cannot be parsed or fails validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: singular systems, non-finite derivatives, violated
/// geometric preconditions.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failures and malformed logs.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace airlift
