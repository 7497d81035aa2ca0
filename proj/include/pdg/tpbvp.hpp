#pragma once

// Problem interface consumed by the multiple-shooting layer: a first-order
// flow z' = f(z) on the scaled horizon tau in [0,1], a map from the
// first-segment unknowns to z(0), and a terminal residual psi(z(1)).

#include <Eigen/Dense>

#include "pdg/ode.hpp"

namespace pdg {

class TpbvpProblem {
 public:
  virtual ~TpbvpProblem() = default;

  virtual int state_dim() const = 0;            // dimension of z
  virtual int initial_unknown_dim() const = 0;  // dimension of u1
  virtual bool free_final_time() const = 0;
  virtual double fixed_final_time() const { return 1.0; }

  int residual_dim() const {
    return initial_unknown_dim() + (free_final_time() ? 1 : 0);
  }

  // z(tau_0) from the first-segment unknowns; optionally the Jacobian
  // d z0 / d u1 (state_dim x initial_unknown_dim).
  virtual void initial_state(const Eigen::VectorXd& u1, Eigen::VectorXd& z0,
                             Eigen::MatrixXd* dz0_du1) const = 0;

  // Unscaled autonomous rate f(z); the shooting layer integrates tf*f.
  virtual void rate(const double* z, double* dz) const = 0;
  // Rate plus A = df/dz, column-major state_dim x state_dim.
  virtual void rate_and_jacobian(const double* z, double* dz,
                                 double* jac) const = 0;

  // Terminal residual psi(z(1)), dimension residual_dim(); optionally the
  // gradient d psi / d z(1) (residual_dim x state_dim).
  virtual void terminal_residual(const Eigen::VectorXd& z1,
                                 Eigen::VectorXd& psi,
                                 Eigen::MatrixXd* dpsi_dz) const = 0;

  FlowField flow() const {
    FlowField f;
    f.dim = state_dim();
    f.rate = [this](const double* z, double* dz) { rate(z, dz); };
    f.rate_and_jacobian = [this](const double* z, double* dz, double* jac) {
      rate_and_jacobian(z, dz, jac);
    };
    return f;
  }
};

}  // namespace pdg
