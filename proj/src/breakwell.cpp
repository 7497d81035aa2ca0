#include "pdg/breakwell.hpp"

#include <cmath>

#include "pdg/continuation.hpp"
#include "pdg/shooting.hpp"

namespace pdg {

namespace {

class BreakwellContinuation : public ContinuationProblem {
 public:
  explicit BreakwellContinuation(BreakwellProblem& prob) : prob_(prob) {}
  TpbvpProblem& tpbvp() override { return prob_; }
  const TpbvpProblem& tpbvp() const override { return prob_; }
  std::vector<std::string> param_names() const override { return {"rho"}; }
  double get_param(const std::string& name) const override {
    if (name != "rho") throw ConfigError("unknown parameter " + name);
    return prob_.rho();
  }
  void set_param(const std::string& name, double value) override {
    if (name != "rho") throw ConfigError("unknown parameter " + name);
    prob_.set_rho(value);
  }
  std::pair<double, double> objectives(const Eigen::VectorXd&,
                                       const MultipleShooting&,
                                       const Trajectory& traj) const override {
    double max_x = -1e300;
    for (const auto& [t, z] : traj.dense.sample(801))
      max_x = std::max(max_x, z[0]);
    return {max_x, 0.0};
  }

 private:
  BreakwellProblem& prob_;
};

// Cold-start guess: the three-arc constrained solution shrunk to 0.9 l so
// every segment stays strictly inside the barrier, with costates from
// a = -lambda_v on the end arcs.
Eigen::VectorXd analytic_guess(const MultipleShooting& shooting, double l) {
  const double lg = 0.9 * l;
  BreakwellAnalytic g{lg};
  auto costates = [&](double t) -> std::pair<double, double> {
    if (t <= 3.0 * lg) return {2.0 / (9.0 * lg * lg), -g.control(t)};
    if (t >= 1.0 - 3.0 * lg) return {-2.0 / (9.0 * lg * lg), -g.control(t)};
    return {0.0, 0.0};
  };
  const int n = shooting.layout().n;
  Eigen::VectorXd u1(2);
  u1 << costates(0.0).first, costates(0.0).second;
  std::vector<Eigen::VectorXd> interior;
  for (int i = 2; i <= n; ++i) {
    const double tau = shooting.grid().nodes[static_cast<std::size_t>(i - 1)];
    Eigen::VectorXd z(4);
    const auto [lx, lv] = costates(tau);
    z << g.position(tau), g.velocity(tau), lx, lv;
    interior.push_back(z);
  }
  return shooting.assemble_unknowns(1.0, u1, interior);
}

}  // namespace

BreakwellSolution solve_breakwell(const std::vector<double>& rho_schedule,
                                  int segments, Trajectory* trajectory) {
  if (rho_schedule.empty())
    throw ConfigError("breakwell schedule must contain at least one weight");
  const double rho_first = rho_schedule.front();
  const double rho_last = rho_schedule.back();

  BreakwellProblem prob(0.125, rho_first);
  BreakwellContinuation cont(prob);

  SolverConfig solver;
  solver.damping = LmDamping::kDecades;
  solver.integrator.abs_tol = solver.integrator.rel_tol = 1e-13;

  ContinuationSchedule schedule;
  schedule.retry_cap = 6;
  schedule.stage_iteration_cap = 150;
  {
    ContinuationStage cold;
    cold.segments = segments;
    cold.steps = 1;
    cold.solve_tol = 1e-9;
    cold.label = "cold";
    schedule.stages.push_back(cold);
    if (rho_last < rho_first) {
      // One substep per factor-two reduction, then a tight endgame on a
      // finer grid where the barrier arc is most sensitive.
      const double mid = std::max(rho_last * 100.0, rho_last);
      if (mid < rho_first) {
        ContinuationStage sweep;
        sweep.steps = std::max(
            1, static_cast<int>(std::ceil(std::log2(rho_first / mid))));
        sweep.targets["rho"] = mid;
        sweep.solve_tol = 1e-9;
        sweep.label = "sweep";
        schedule.stages.push_back(sweep);
      }
      ContinuationStage endgame;
      endgame.segments = 4 * segments;
      endgame.steps = std::max(
          1, static_cast<int>(std::ceil(std::log2(mid / rho_last))));
      endgame.targets["rho"] = rho_last;
      endgame.solve_tol = 1e-10;
      endgame.label = "endgame";
      schedule.stages.push_back(endgame);
    }
  }

  ContinuationDriver driver(cont, solver);
  MultipleShooting shooting0(prob, segments, solver);
  RunState state =
      driver.initial_state(analytic_guess(shooting0, prob.path_bound()),
                           segments);
  state = driver.run(schedule, state);
  if (!state.completed) throw PdgError("breakwell: " + state.message);

  BreakwellSolution sol;
  sol.unknowns = state.unknowns;
  sol.rho = prob.rho();
  for (const auto& row : state.history) {
    sol.rho_history.push_back(row.params.at("rho"));
    sol.max_position_history.push_back(row.objective1);
  }
  sol.max_position = sol.max_position_history.back();
  sol.max_boundary_residual = state.history.back().residual_inf;

  SolverConfig final_cfg = solver;
  MultipleShooting shooting(prob, state.segments, final_cfg);
  const Trajectory traj = shooting.integrate_trajectory(state.unknowns);
  if (trajectory) *trajectory = traj;

  // Cost J = 1/2 int a^2 dt with a = -lambda_v: quadrature state propagated
  // segment by segment from the converged segment starts.
  {
    const double l = prob.path_bound();
    const double rho = prob.rho();
    auto rhs = [&](double, const double* y, double* dy) {
      std::array<double, 4> z4{y[0], y[1], y[2], y[3]};
      const auto d = breakwell_rate(z4, l, rho);
      std::copy_n(d.begin(), 4, dy);
      dy[4] = 0.5 * y[3] * y[3];
    };
    const ShootingLayout& lay = shooting.layout();
    Eigen::VectorXd z0;
    prob.initial_state(state.unknowns.segment(lay.u1_offset(), 2), z0,
                       nullptr);
    double cost = 0.0;
    for (int seg = 0; seg < lay.n; ++seg) {
      double y[5];
      if (seg == 0) {
        for (int i = 0; i < 4; ++i) y[i] = z0[i];
      } else {
        const auto zi = state.unknowns.segment(lay.ui_offset(seg + 1), 4);
        for (int i = 0; i < 4; ++i) y[i] = zi[i];
      }
      y[4] = 0.0;
      integrate_ivp(rhs, 5, shooting.grid().nodes[static_cast<std::size_t>(seg)],
                    shooting.grid().nodes[static_cast<std::size_t>(seg) + 1], y,
                    solver.integrator);
      cost += y[4];
    }
    sol.cost = cost;
  }
  return sol;
}

}  // namespace pdg
