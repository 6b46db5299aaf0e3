#pragma once

#include <stdexcept>
#include <string>

namespace uncond {

// Bad arguments, mismatched shapes, malformed configs.
struct InvalidParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// (n, k, d) outside the admissible range, or a split exceeding capacity.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Point cloud does not span the lifted space.
struct DegenerateCloudError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iteration budget exhausted before the requested tolerance.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& msg, double achieved)
      : std::runtime_error(msg), achieved_gap(achieved) {}
  double achieved_gap;
};

// Conditioning or resource guard tripped.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace uncond
