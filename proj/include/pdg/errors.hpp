#pragma once

#include <stdexcept>
#include <string>

namespace pdg {

struct PdgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A secant penalty argument reached its singular boundary (P_i >= 1): the
// integration left the feasible interior.
struct ConstraintBoundaryError : PdgError {
  ConstraintBoundaryError(const std::string& what, int constraint_index,
                          double p_value)
      : PdgError(what), index(constraint_index), p(p_value) {}
  int index;
  double p;
};

// Tilt-angle derivative singularity (q1 = q2 = 0 with rho_theta > 0), or the
// steering direction is undefined (primer vector cancels the gimbal shift).
struct SingularityError : PdgError {
  using PdgError::PdgError;
};

struct DegeneratePositionError : PdgError {
  using PdgError::PdgError;
};

struct IntegrationError : PdgError {
  IntegrationError(const std::string& what, double tau_at)
      : PdgError(what), tau(tau_at) {}
  double tau;
};

struct StepSizeUnderflow : IntegrationError {
  using IntegrationError::IntegrationError;
};

struct MaxStepsExceeded : IntegrationError {
  using IntegrationError::IntegrationError;
};

struct DimensionMismatch : PdgError {
  using PdgError::PdgError;
};

struct ConfigError : PdgError {
  using PdgError::PdgError;
};

struct CheckpointError : PdgError {
  using PdgError::PdgError;
};

}  // namespace pdg
