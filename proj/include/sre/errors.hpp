#pragma once

#include <stdexcept>
#include <string>

namespace sre {

// Argument outside the mathematical domain of an operation.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A declared coefficient bound fails at a checked point.
struct BoundViolation : std::runtime_error {
  enum class Which { value_below_delta, value_above_inv_delta, derivative_at_L };

  BoundViolation(double x_, Which which_, double offending_value_, const std::string& msg)
      : std::runtime_error(msg), x(x_), which(which_), offending_value(offending_value_) {}

  double x;
  Which which;
  double offending_value;
};

// Adaptive quadrature exceeded its subdivision budget.
struct QuadratureFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Root-finding iteration budget exhausted.
struct RootFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Finite-difference mesh unusable for the requested solve.
struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Probability mass lost through the mesh boundary exceeds tolerance.
struct MassLeak : std::runtime_error {
  MassLeak(double mass_, const std::string& msg) : std::runtime_error(msg), mass(mass_) {}
  double mass;
};

// A density backend produced a nonpositive value where a log is needed.
struct KernelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config file rejected; carries the first offending line/key.
struct ConfigError : std::runtime_error {
  ConfigError(int line_, std::string key_, const std::string& msg)
      : std::runtime_error(msg), line(line_), key(std::move(key_)) {}
  int line;
  std::string key;
};

}  // namespace sre
