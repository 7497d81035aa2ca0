#pragma once

// Breakwell problem: minimum-energy double integrator with the position
// bound x(t) <= l enforced by a secant barrier. Serves as the validation
// case with a closed-form constrained-arc solution.

#include <array>
#include <cmath>

#include "pdg/dual.hpp"
#include "pdg/errors.hpp"
#include "pdg/rocket_model.hpp"
#include "pdg/tpbvp.hpp"

namespace pdg {

// z = [x, v, lambda_x, lambda_v]; optimal control a* = -lambda_v.
template <class S>
std::array<S, 4> breakwell_rate(const std::array<S, 4>& z, double l,
                                double rho) {
  const S& x = z[0];
  const S& v = z[1];
  const S& lx = z[2];
  const S& lv = z[3];
  S lx_dot(0.0);
  if (rho > 0.0) {
    const double p = value_of(x) / l;
    if (p >= 1.0)
      throw ConstraintBoundaryError("breakwell barrier reached x = l", 1, p);
    if (p <= -1.0)
      throw ConstraintBoundaryError("breakwell barrier argument below -1", 1,
                                    p);
    const S arg = (0.5 * kPi / l) * x;
    lx_dot = -(rho * 0.5 * kPi / l) * sec(arg) * tan(arg);
  }
  return {v, -lv, lx_dot, -lx};
}

inline double breakwell_hamiltonian(const std::array<double, 4>& z, double l,
                                    double rho) {
  const double barrier =
      rho > 0.0 ? rho * sec(0.5 * kPi * z[0] / l) : 0.0;
  return -0.5 * z[3] * z[3] + z[2] * z[1] + barrier;
}

class BreakwellProblem : public TpbvpProblem {
 public:
  explicit BreakwellProblem(double path_bound = 0.125, double rho = 1e-2)
      : l_(path_bound), rho_(rho) {
    if (!(l_ > 0.0)) throw ConfigError("path bound must be positive");
  }

  double path_bound() const { return l_; }
  double rho() const { return rho_; }
  void set_rho(double rho) { rho_ = rho; }

  int state_dim() const override { return 4; }
  int initial_unknown_dim() const override { return 2; }
  bool free_final_time() const override { return false; }
  double fixed_final_time() const override { return 1.0; }

  // u1 = [lambda_x(0), lambda_v(0)]; x(0) = 0, v(0) = 1 fixed.
  void initial_state(const Eigen::VectorXd& u1, Eigen::VectorXd& z0,
                     Eigen::MatrixXd* dz0_du1) const override {
    if (u1.size() != 2) throw DimensionMismatch("u1 must have 2 entries");
    z0.resize(4);
    z0 << 0.0, 1.0, u1[0], u1[1];
    if (dz0_du1) {
      dz0_du1->setZero(4, 2);
      (*dz0_du1)(2, 0) = 1.0;
      (*dz0_du1)(3, 1) = 1.0;
    }
  }

  void rate(const double* z, double* dz) const override {
    std::array<double, 4> za;
    std::copy_n(z, 4, za.begin());
    const auto d = breakwell_rate(za, l_, rho_);
    std::copy_n(d.begin(), 4, dz);
  }

  void rate_and_jacobian(const double* z, double* dz,
                         double* jac) const override {
    using D = Dual<double, 4>;
    std::array<D, 4> za;
    for (int i = 0; i < 4; ++i) za[i] = D::variable(z[i], i);
    const auto d = breakwell_rate(za, l_, rho_);
    for (int i = 0; i < 4; ++i) {
      dz[i] = d[i].val;
      for (int j = 0; j < 4; ++j) jac[j * 4 + i] = d[i].der[j];
    }
  }

  // psi = [x(1), v(1) + 1].
  void terminal_residual(const Eigen::VectorXd& z1, Eigen::VectorXd& psi,
                         Eigen::MatrixXd* dpsi_dz) const override {
    psi.resize(2);
    psi << z1[0], z1[1] + 1.0;
    if (dpsi_dz) {
      dpsi_dz->setZero(2, 4);
      (*dpsi_dz)(0, 0) = 1.0;
      (*dpsi_dz)(1, 1) = 1.0;
    }
  }

 private:
  double l_;
  double rho_;
};

struct BreakwellSolution {
  Eigen::VectorXd unknowns;       // converged unknowns at the final rho
  double rho = 0.0;               // final penalty weight
  double cost = 0.0;              // J = 1/2 int a^2 dt
  double max_position = 0.0;      // max_t x(t)
  double max_boundary_residual = 0.0;
  std::vector<double> rho_history;
  std::vector<double> max_position_history;  // per continuation stage
};

class MultipleShooting;
struct SolverConfig;

// Solves the Breakwell TPBVP by multiple shooting, sweeping the barrier
// weight down the given schedule with warm starts. The trajectory at the
// final weight is returned through `trajectory` when non-null.
BreakwellSolution solve_breakwell(const std::vector<double>& rho_schedule,
                                  int segments = 8,
                                  struct Trajectory* trajectory = nullptr);

// Closed-form constrained-arc solution (valid for l <= 1/6): entry cubic on
// [0, 3l], resting arc x = l on [3l, 1-3l], and the mirrored exit cubic.
struct BreakwellAnalytic {
  double l = 0.125;

  double position(double t) const {
    if (t <= 3.0 * l) {
      const double s = 1.0 - t / (3.0 * l);
      return l * (1.0 - s * s * s);
    }
    if (t >= 1.0 - 3.0 * l) return position(1.0 - t);
    return l;
  }
  double velocity(double t) const {
    if (t <= 3.0 * l) {
      const double s = 1.0 - t / (3.0 * l);
      return s * s;
    }
    if (t >= 1.0 - 3.0 * l) return -velocity(1.0 - t);
    return 0.0;
  }
  double control(double t) const {
    if (t <= 3.0 * l) return -2.0 / (3.0 * l) * (1.0 - t / (3.0 * l));
    if (t >= 1.0 - 3.0 * l) return control(1.0 - t);
    return 0.0;
  }
  double cost() const { return 4.0 / (9.0 * l); }
};

}  // namespace pdg
