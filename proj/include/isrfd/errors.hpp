#pragma once

#include <stdexcept>
#include <string>

namespace isrfd {

/// Bad scenario/configuration input (out-of-range index, malformed file, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical procedure failed (non-convergence, degenerate geometry, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace isrfd
