#include "pdg/continuation.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include "pdg/errors.hpp"

namespace pdg {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

// Geometric interpolation between parameter values with special cases for
// switching a weight on or off (no geometric path through zero).
double interp_param(double from, double to, double s) {
  if (from == to) return to;
  if (from > 0.0 && to > 0.0) return from * std::pow(to / from, s);
  if (from == 0.0) return to;           // turn on immediately
  return s >= 1.0 ? to : from;          // turn off only at the endpoint
}

}  // namespace

ShootingSolveResult multi_start_solve(const MultipleShooting& shooting,
                                      const MultiStartPolicy& policy) {
  std::string failures;
  for (int attempt = 0; attempt < policy.attempts; ++attempt) {
    const Eigen::VectorXd guess = policy.sample(attempt);
    try {
      ShootingSolveResult res = shooting.solve(guess);
      if (res.lm.converged) return res;
      if (failures.size() < 400)
        failures += " [" + std::to_string(attempt) + "] " + res.lm.message;
    } catch (const PdgError& e) {
      if (failures.size() < 400)
        failures += " [" + std::to_string(attempt) + "] " + e.what();
    }
  }
  throw PdgError("multi-start budget exhausted:" + failures);
}

RunState ContinuationDriver::initial_state(const Eigen::VectorXd& unknowns,
                                           int segments) const {
  RunState st;
  st.unknowns = unknowns;
  st.segments = segments;
  st.next_stage = 0;
  for (const auto& name : problem_.param_names())
    st.params[name] = problem_.get_param(name);
  return st;
}

RunState ContinuationDriver::run(const ContinuationSchedule& schedule,
                                 RunState state) const {
  // Re-apply the stored parameter values (resume path).
  for (const auto& [name, value] : state.params)
    problem_.set_param(name, value);

  auto make_shooting = [&](int segments, double tol) {
    SolverConfig cfg = solver_config_;
    if (tol > 0.0) cfg.function_tol = tol;
    cfg.max_iterations = schedule.stage_iteration_cap;
    return std::make_unique<MultipleShooting>(problem_.tpbvp(), segments,
                                              cfg);
  };

  double prev_obj1 = 0.0, prev_obj2 = 0.0;
  double prev_delta1 = 0.0, prev_delta2 = 0.0;
  bool have_prev_obj = false, have_prev_delta = false;
  int consecutive_hot = 0;

  for (int stage_idx = state.next_stage;
       stage_idx < static_cast<int>(schedule.stages.size()); ++stage_idx) {
    const ContinuationStage& stage =
        schedule.stages[static_cast<std::size_t>(stage_idx)];

    // Grid escalation with warm-start interpolation.
    if (stage.segments > 0 && stage.segments != state.segments) {
      auto old_shooting = make_shooting(state.segments, stage.solve_tol);
      const Trajectory traj =
          old_shooting->integrate_trajectory(state.unknowns);
      auto new_shooting = make_shooting(stage.segments, stage.solve_tol);
      state.unknowns = new_shooting->unknowns_from_trajectory(
          traj, state.unknowns, old_shooting->layout());
      state.segments = stage.segments;
    }

    auto shooting = make_shooting(state.segments, stage.solve_tol);

    // Joint geometric sweep from the current values to the stage targets.
    const std::map<std::string, double> from = state.params;
    for (const auto& [name, target] : stage.targets)
      if (from.find(name) == from.end())
        throw ConfigError("unknown continuation parameter: " + name);

    for (int sub = 1; sub <= stage.steps; ++sub) {
      const double s_target =
          static_cast<double>(sub) / static_cast<double>(stage.steps);
      const double s_base = static_cast<double>(sub - 1) / stage.steps;

      // Fractional progress within this substep, halved on failures.
      double progressed = 0.0;
      double fraction = 1.0;
      int failures = 0;
      while (progressed < 1.0) {
        const double s_try =
            s_base + (s_target - s_base) * std::min(1.0, progressed + fraction);
        std::map<std::string, double> trial = state.params;
        for (const auto& [name, target] : stage.targets)
          trial[name] = interp_param(from.at(name), target, s_try);
        for (const auto& [name, value] : trial)
          problem_.set_param(name, value);

        const double t0 = now_seconds();
        ShootingSolveResult res;
        bool ok = false;
        std::string why;
        try {
          res = shooting->solve(state.unknowns);
          ok = res.lm.converged;
          why = res.lm.message;
        } catch (const PdgError& e) {
          why = e.what();
        }

        if (!ok) {
          if (++failures > schedule.retry_cap) {
            for (const auto& [name, value] : state.params)
              problem_.set_param(name, value);
            state.completed = false;
            state.message = "stage " + std::to_string(stage_idx) + " (" +
                            stage.label + ") failed after " +
                            std::to_string(failures - 1) +
                            " retries: " + why;
            state.next_stage = stage_idx;
            return state;
          }
          fraction *= 0.5;
          continue;
        }

        state.unknowns = res.unknowns;
        progressed = std::min(1.0, progressed + fraction);
        state.params = trial;

        HistoryRow row;
        row.stage = stage_idx;
        row.substep = sub;
        row.params = trial;
        row.segments = state.segments;
        row.tf = shooting->final_time_of(state.unknowns);
        row.residual_inf = res.lm.residual_inf;
        row.iterations = res.lm.iterations;
        row.wall_seconds = now_seconds() - t0;
        {
          const Trajectory traj =
              shooting->integrate_trajectory(state.unknowns);
          const auto [o1, o2] =
              problem_.objectives(state.unknowns, *shooting, traj);
          row.objective1 = o1;
          row.objective2 = o2;
        }
        state.history.push_back(row);
        if (on_substep) on_substep(state);

        // Warm-start monotonicity alarm.
        if (res.lm.iterations >= (4 * schedule.stage_iteration_cap) / 5) {
          if (++consecutive_hot >= 2)
            state.warnings.push_back(
                "warm starts repeatedly near the iteration cap at stage " +
                std::to_string(stage_idx));
        } else {
          consecutive_hot = 0;
        }

        // Objective-continuity alarm: a 10x jump in the per-substep delta.
        if (have_prev_obj) {
          const double d1 = std::fabs(row.objective1 - prev_obj1);
          const double d2 = std::fabs(row.objective2 - prev_obj2);
          if (have_prev_delta &&
              ((prev_delta1 > 1e-12 && d1 > 10.0 * prev_delta1) ||
               (prev_delta2 > 1e-12 && d2 > 10.0 * prev_delta2)))
            state.warnings.push_back(
                "objective jump at stage " + std::to_string(stage_idx) +
                " substep " + std::to_string(sub));
          prev_delta1 = d1;
          prev_delta2 = d2;
          have_prev_delta = true;
        }
        prev_obj1 = row.objective1;
        prev_obj2 = row.objective2;
        have_prev_obj = true;
      }
    }
    state.next_stage = stage_idx + 1;
  }

  state.completed = true;
  state.message = "schedule completed";
  return state;
}

}  // namespace pdg
