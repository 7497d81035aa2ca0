#pragma once

// Damped least-squares (Levenberg-Marquardt) root finder with Jacobian
// column scaling, for square nonlinear systems with ill-conditioned
// Jacobians. Trial points may be rejected as infeasible by the callbacks
// (interior-point discipline): a rejected trial only increases the damping.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <vector>

namespace pdg {

// Damping update policy. kGainRatio adapts the damping continuously from
// the agreement between actual and predicted reduction (Madsen-Nielsen-
// Tingleff); kDecades is the plain x10 / /10 schedule on reject / accept.
enum class LmDamping { kGainRatio, kDecades };

struct LmConfig {
  double function_tol = 1e-10;  // convergence on ||r||_inf
  double step_tol = 1e-14;      // stall detection on ||dx|| / (1 + ||x||)
  int max_iterations = 200;
  double mu0 = 1e-3;
  double mu_min = 1e-14;
  double mu_max = 1e16;
  LmDamping damping = LmDamping::kGainRatio;
  bool verbose = false;
};

struct LmCallbacks {
  // Fill r(x); return false if x is infeasible (trial will be rejected).
  std::function<bool(const Eigen::VectorXd& x, Eigen::VectorXd& r)> residual;
  // Fill r(x) and J(x); only called at accepted points.
  std::function<bool(const Eigen::VectorXd& x, Eigen::VectorXd& r,
                     Eigen::SparseMatrix<double>& jac)>
      residual_and_jacobian;
};

struct LmResult {
  Eigen::VectorXd x;
  bool converged = false;
  int iterations = 0;
  double residual_inf = 0.0;
  double residual_two = 0.0;
  std::vector<double> residual_history;  // ||r||_inf after each iteration
  std::vector<double> damping_history;
  double condition_estimate = 0.0;  // crude, from the last LDLT factor
  std::string message;
};

LmResult levenberg_marquardt(const LmCallbacks& cb, Eigen::VectorXd x0,
                             const LmConfig& cfg);

}  // namespace pdg
