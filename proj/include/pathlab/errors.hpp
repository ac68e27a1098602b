#pragma once

#include <stdexcept>
#include <string>

namespace pathlab {

// A step left the retraction/transport domain; rerun with a finer grid.
struct StepSizeError : std::runtime_error {
  explicit StepSizeError(const std::string& what) : std::runtime_error(what) {}
};

// Gram matrix of a fitting basis is singular or too ill-conditioned.
struct DegenerateBasisError : std::runtime_error {
  explicit DegenerateBasisError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration file could not be parsed; message carries the line number.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pathlab
