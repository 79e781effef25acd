#pragma once

#include <stdexcept>
#include <string>

namespace psoforge {

/// Invalid specs, flags, or parameter combinations. CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent data files. CLI exit code 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Metric preconditions violated (e.g. single-class AUCROC input).
struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite state during ODE integration; carries the failing step.
struct SamplerDivergence : std::runtime_error {
  SamplerDivergence(int step_index, const std::string& msg)
      : std::runtime_error(msg), step(step_index) {}
  int step;
};

}  // namespace psoforge
