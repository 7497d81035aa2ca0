#pragma once

// Homotopy driver: sweeps smoothing weights and relaxed constraint bounds
// from an easy problem to the target problem, warm-starting each solve and
// escalating the shooting grid per schedule stage.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdg/shooting.hpp"

namespace pdg {

// Named continuation parameters of a problem (smoothing weights, relaxed
// constraint bounds). Values are applied before each solve.
class ContinuationProblem {
 public:
  virtual ~ContinuationProblem() = default;
  virtual TpbvpProblem& tpbvp() = 0;
  virtual const TpbvpProblem& tpbvp() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual double get_param(const std::string& name) const = 0;
  virtual void set_param(const std::string& name, double value) = 0;
  // Two problem-defined summary numbers for the run history (e.g. final
  // mass and final time).
  virtual std::pair<double, double> objectives(
      const Eigen::VectorXd& unknowns, const MultipleShooting& shooting,
      const Trajectory& traj) const = 0;
};

struct ContinuationStage {
  int segments = 0;  // 0 keeps the current grid
  std::map<std::string, double> targets;  // joint geometric sweep targets
  int steps = 1;                          // substeps toward the targets
  double solve_tol = 0.0;     // 0 uses the solver default for this stage
  std::string label;
};

struct ContinuationSchedule {
  std::vector<ContinuationStage> stages;
  int retry_cap = 3;         // step-halving retries per substep
  int stage_iteration_cap = 200;
};

struct HistoryRow {
  int stage = 0;
  int substep = 0;
  std::map<std::string, double> params;
  int segments = 0;
  double tf = 0.0;
  double objective1 = 0.0;
  double objective2 = 0.0;
  double residual_inf = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
};

struct RunState {
  Eigen::VectorXd unknowns;
  int segments = 0;
  int next_stage = 0;  // first stage not yet completed
  std::map<std::string, double> params;
  std::vector<HistoryRow> history;
  std::vector<std::string> warnings;
  bool completed = false;
  std::string message;
};

class ContinuationDriver {
 public:
  ContinuationDriver(ContinuationProblem& problem, SolverConfig solver_config)
      : problem_(problem), solver_config_(solver_config) {}

  // Called after every converged substep (checkpointing hook).
  std::function<void(const RunState&)> on_substep;

  // Runs the schedule from an explicit starting point. `state.next_stage`
  // selects where to resume; parameters stored in the state are re-applied.
  RunState run(const ContinuationSchedule& schedule, RunState state) const;

  // Convenience: fresh state from an initial guess at the current parameter
  // values of the problem.
  RunState initial_state(const Eigen::VectorXd& unknowns, int segments) const;

 private:
  ContinuationProblem& problem_;
  SolverConfig solver_config_;
};

// Seeded multi-start for cold starts: the sampler draws candidate unknown
// vectors until one solves, up to the attempt budget.
struct MultiStartPolicy {
  int attempts = 50;
  std::function<Eigen::VectorXd(int attempt)> sample;
};

// Attempts a cold solve; returns the first converged result.
ShootingSolveResult multi_start_solve(const MultipleShooting& shooting,
                                      const MultiStartPolicy& policy);

}  // namespace pdg
