#pragma once

// Multiple shooting on the scaled horizon tau in [0,1]: unknown packing,
// continuity defects, terminal residuals, banded block-Jacobian assembly
// from the propagated sensitivities, and the damped least-squares solve.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "pdg/lm.hpp"
#include "pdg/ode.hpp"
#include "pdg/tpbvp.hpp"

namespace pdg {

// Equally spaced segment grid 0 = tau_0 < ... < tau_n = 1.
struct ShootingGrid {
  explicit ShootingGrid(int segments);
  int n;
  std::vector<double> nodes;  // n + 1 entries
};

// Packing of the unknown vector: [tf (if free)] ++ u1 ++ u_2 ++ ... ++ u_n,
// where u_i (i >= 2) are full states at segment starts. The ordering is part
// of the checkpoint file format.
struct ShootingLayout {
  int n = 1;
  int state_dim = 0;
  int k1 = 0;
  bool free_tf = false;

  int dim() const { return (free_tf ? 1 : 0) + k1 + state_dim * (n - 1); }
  int u1_offset() const { return free_tf ? 1 : 0; }
  int ui_offset(int i) const {  // i in [2, n]
    return u1_offset() + k1 + state_dim * (i - 2);
  }
  int rows() const { return state_dim * (n - 1) + k1 + (free_tf ? 1 : 0); }
  int gi_row(int i) const { return state_dim * (i - 1); }  // i in [1, n]
};

// Block form of the Eq.-43 Jacobian: a dense diagonal block per segment, the
// implicit -I coupling to the next segment's unknowns, and the dense tf
// column. Off-pattern blocks are structural zeros.
struct BlockJacobian {
  ShootingLayout layout;
  std::vector<Eigen::MatrixXd> diag;    // dG_i/du_i, i = 1..n
  std::vector<Eigen::VectorXd> tf_col;  // dG_i/dtf, empty when tf fixed
  Eigen::MatrixXd dense() const;
  Eigen::SparseMatrix<double> sparse() const;
};

struct ShootingSolveResult {
  Eigen::VectorXd unknowns;
  LmResult lm;
  long segment_integrations = 0;
};

// Reconstructed solution: dense z(tau) over the whole horizon.
struct Trajectory {
  double tf = 1.0;
  DenseOutput dense;
};

struct SolverConfig {
  double function_tol = 1e-10;
  double step_tol = 1e-14;
  int max_iterations = 100;
  double mu0 = 1e-3;
  LmDamping damping = LmDamping::kGainRatio;
  bool verbose = false;
  IntegratorConfig integrator;
};

class MultipleShooting {
 public:
  MultipleShooting(const TpbvpProblem& problem, int segments,
                   SolverConfig config = {});

  const ShootingGrid& grid() const { return grid_; }
  const ShootingLayout& layout() const { return layout_; }
  const SolverConfig& config() const { return config_; }
  SolverConfig& config() { return config_; }

  // Packs (tf, u1, interior segment states) into the unknown vector. The
  // segment-state list must have n-1 entries of state_dim each (may be empty
  // for n = 1).
  Eigen::VectorXd assemble_unknowns(
      double tf, const Eigen::VectorXd& u1,
      const std::vector<Eigen::VectorXd>& interior_states) const;

  double final_time_of(const Eigen::VectorXd& unknowns) const;

  Eigen::VectorXd residuals(const Eigen::VectorXd& unknowns) const;
  Eigen::VectorXd residuals_and_jacobian(const Eigen::VectorXd& unknowns,
                                         BlockJacobian& jac) const;

  ShootingSolveResult solve(const Eigen::VectorXd& initial_guess) const;

  // Re-integrates all segments densely from a converged (or candidate)
  // unknown vector.
  Trajectory integrate_trajectory(const Eigen::VectorXd& unknowns) const;

  // Warm start for this grid from a finer/coarser solution: tf and u1 are
  // copied, interior segment starts are interpolated from the trajectory.
  Eigen::VectorXd unknowns_from_trajectory(
      const Trajectory& traj, const Eigen::VectorXd& source_unknowns,
      const ShootingLayout& source_layout) const;

 private:
  struct SegmentEval;
  void integrate_segments(const Eigen::VectorXd& unknowns, bool jacobians,
                          std::vector<SegmentEval>& out) const;

  const TpbvpProblem& problem_;
  ShootingGrid grid_;
  ShootingLayout layout_;
  SolverConfig config_;
  mutable long segment_integrations_ = 0;
};

}  // namespace pdg
