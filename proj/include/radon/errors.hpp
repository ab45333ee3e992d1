#pragma once

#include <stdexcept>
#include <string>

namespace radon {

/// Malformed user input (files, configs, CLI). Maps to exit code 2.
struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numeric failure (non-finite loss, degenerate data). Maps to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Contract violation in tensor-op wiring (operand shapes, ranks).
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace radon
