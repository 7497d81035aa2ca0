#include "pdg/shooting.hpp"

#include <cmath>

#include "pdg/errors.hpp"
#include "pdg/util.hpp"

namespace pdg {

ShootingGrid::ShootingGrid(int segments) : n(segments) {
  if (segments < 1) throw ConfigError("segment count must be >= 1");
  nodes.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i)
    nodes[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
}

Eigen::MatrixXd BlockJacobian::dense() const {
  const int rows = layout.rows();
  const int cols = layout.dim();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(rows, cols);
  const int sd = layout.state_dim;
  for (int i = 1; i <= layout.n; ++i) {
    const auto& blk = diag[static_cast<std::size_t>(i - 1)];
    const int row = layout.gi_row(i);
    const int col = i == 1 ? layout.u1_offset() : layout.ui_offset(i);
    full.block(row, col, blk.rows(), blk.cols()) = blk;
    if (i < layout.n)
      full.block(row, layout.ui_offset(i + 1), sd, sd) =
          -Eigen::MatrixXd::Identity(sd, sd);
    if (layout.free_tf)
      full.block(row, 0, blk.rows(), 1) =
          tf_col[static_cast<std::size_t>(i - 1)];
  }
  return full;
}

Eigen::SparseMatrix<double> BlockJacobian::sparse() const {
  const int rows = layout.rows();
  const int cols = layout.dim();
  std::vector<Eigen::Triplet<double>> trip;
  const int sd = layout.state_dim;
  std::size_t nnz = 0;
  for (const auto& blk : diag)
    nnz += static_cast<std::size_t>(blk.size());
  trip.reserve(nnz + static_cast<std::size_t>(rows) * 2);
  for (int i = 1; i <= layout.n; ++i) {
    const auto& blk = diag[static_cast<std::size_t>(i - 1)];
    const int row = layout.gi_row(i);
    const int col = i == 1 ? layout.u1_offset() : layout.ui_offset(i);
    for (int c = 0; c < blk.cols(); ++c)
      for (int r = 0; r < blk.rows(); ++r)
        trip.emplace_back(row + r, col + c, blk(r, c));
    if (i < layout.n)
      for (int r = 0; r < sd; ++r)
        trip.emplace_back(row + r, layout.ui_offset(i + 1) + r, -1.0);
    if (layout.free_tf) {
      const auto& tc = tf_col[static_cast<std::size_t>(i - 1)];
      for (int r = 0; r < tc.size(); ++r)
        trip.emplace_back(row + r, 0, tc[r]);
    }
  }
  Eigen::SparseMatrix<double> s(rows, cols);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

MultipleShooting::MultipleShooting(const TpbvpProblem& problem, int segments,
                                   SolverConfig config)
    : problem_(problem), grid_(segments), config_(config) {
  layout_.n = segments;
  layout_.state_dim = problem.state_dim();
  layout_.k1 = problem.initial_unknown_dim();
  layout_.free_tf = problem.free_final_time();
}

Eigen::VectorXd MultipleShooting::assemble_unknowns(
    double tf, const Eigen::VectorXd& u1,
    const std::vector<Eigen::VectorXd>& interior_states) const {
  if (u1.size() != layout_.k1)
    throw DimensionMismatch("u1 size does not match the problem");
  if (static_cast<int>(interior_states.size()) != layout_.n - 1)
    throw DimensionMismatch("expected n-1 interior segment states");
  Eigen::VectorXd u(layout_.dim());
  if (layout_.free_tf) u[0] = tf;
  u.segment(layout_.u1_offset(), layout_.k1) = u1;
  for (int i = 2; i <= layout_.n; ++i) {
    const auto& zi = interior_states[static_cast<std::size_t>(i - 2)];
    if (zi.size() != layout_.state_dim)
      throw DimensionMismatch("interior state size mismatch");
    u.segment(layout_.ui_offset(i), layout_.state_dim) = zi;
  }
  return u;
}

double MultipleShooting::final_time_of(const Eigen::VectorXd& u) const {
  return layout_.free_tf ? u[0] : problem_.fixed_final_time();
}

struct MultipleShooting::SegmentEval {
  Eigen::VectorXd z_end;
  Eigen::MatrixXd phi;  // empty unless jacobians requested
  Eigen::VectorXd psi;
};

void MultipleShooting::integrate_segments(const Eigen::VectorXd& u,
                                          bool jacobians,
                                          std::vector<SegmentEval>& out) const {
  if (u.size() != layout_.dim())
    throw DimensionMismatch("unknown vector size does not match the grid");
  const int n = layout_.n;
  const int sd = layout_.state_dim;
  const double tf = final_time_of(u);
  if (layout_.free_tf && !(tf > 0.0))
    throw PdgError("final time must be positive");

  out.assign(static_cast<std::size_t>(n), SegmentEval{});
  const FlowField flow = problem_.flow();

  // First-segment initial state (plus its u1 Jacobian when needed).
  Eigen::VectorXd z0_first;
  Eigen::MatrixXd dz0_first;
  problem_.initial_state(u.segment(layout_.u1_offset(), layout_.k1), z0_first,
                         jacobians ? &dz0_first : nullptr);

  segment_integrations_ += n;
  parallel_for(n, [&](int seg) {
    SegmentEval& ev = out[static_cast<std::size_t>(seg)];
    const double tau0 = grid_.nodes[static_cast<std::size_t>(seg)];
    const double tau1 = grid_.nodes[static_cast<std::size_t>(seg) + 1];
    Eigen::VectorXd z0 =
        seg == 0 ? z0_first
                 : u.segment(layout_.ui_offset(seg + 1), sd).eval();
    if (jacobians) {
      const SensitivityResult sens = integrate_with_sensitivities(
          flow, tf, z0.data(), tau0, tau1, config_.integrator);
      ev.z_end = Eigen::Map<const Eigen::VectorXd>(sens.z1.data(), sd);
      ev.phi = Eigen::Map<const Eigen::MatrixXd>(sens.phi.data(), sd, sd);
      ev.psi = Eigen::Map<const Eigen::VectorXd>(sens.psi.data(), sd);
    } else {
      Eigen::VectorXd z = z0;
      integrate_flow(flow, tf, z.data(), tau0, tau1, config_.integrator);
      ev.z_end = z;
    }
  });

  if (jacobians) {
    // Fold the u1 map into the first segment's STM.
    out[0].phi = out[0].phi * dz0_first;
  }
}

Eigen::VectorXd MultipleShooting::residuals(const Eigen::VectorXd& u) const {
  std::vector<SegmentEval> segs;
  integrate_segments(u, false, segs);
  const int n = layout_.n;
  const int sd = layout_.state_dim;
  Eigen::VectorXd r(layout_.rows());
  for (int i = 1; i < n; ++i)
    r.segment(layout_.gi_row(i), sd) =
        segs[static_cast<std::size_t>(i - 1)].z_end -
        u.segment(layout_.ui_offset(i + 1), sd);
  Eigen::VectorXd psi;
  problem_.terminal_residual(segs[static_cast<std::size_t>(n - 1)].z_end, psi,
                             nullptr);
  r.segment(layout_.gi_row(n), psi.size()) = psi;
  return r;
}

Eigen::VectorXd MultipleShooting::residuals_and_jacobian(
    const Eigen::VectorXd& u, BlockJacobian& jac) const {
  std::vector<SegmentEval> segs;
  integrate_segments(u, true, segs);
  const int n = layout_.n;
  const int sd = layout_.state_dim;

  jac.layout = layout_;
  jac.diag.assign(static_cast<std::size_t>(n), Eigen::MatrixXd());
  jac.tf_col.assign(layout_.free_tf ? static_cast<std::size_t>(n) : 0,
                    Eigen::VectorXd());

  Eigen::VectorXd r(layout_.rows());
  for (int i = 1; i < n; ++i) {
    const auto& ev = segs[static_cast<std::size_t>(i - 1)];
    r.segment(layout_.gi_row(i), sd) =
        ev.z_end - u.segment(layout_.ui_offset(i + 1), sd);
    jac.diag[static_cast<std::size_t>(i - 1)] = ev.phi;
    if (layout_.free_tf) jac.tf_col[static_cast<std::size_t>(i - 1)] = ev.psi;
  }

  const auto& last = segs[static_cast<std::size_t>(n - 1)];
  Eigen::VectorXd psi;
  Eigen::MatrixXd dpsi;
  problem_.terminal_residual(last.z_end, psi, &dpsi);
  r.segment(layout_.gi_row(n), psi.size()) = psi;
  jac.diag[static_cast<std::size_t>(n - 1)] = dpsi * last.phi;
  if (layout_.free_tf)
    jac.tf_col[static_cast<std::size_t>(n - 1)] = dpsi * last.psi;
  return r;
}

ShootingSolveResult MultipleShooting::solve(
    const Eigen::VectorXd& initial_guess) const {
  segment_integrations_ = 0;
  LmConfig lm_cfg;
  lm_cfg.function_tol = config_.function_tol;
  lm_cfg.step_tol = config_.step_tol;
  lm_cfg.max_iterations = config_.max_iterations;
  lm_cfg.mu0 = config_.mu0;
  lm_cfg.damping = config_.damping;
  lm_cfg.verbose = config_.verbose;

  LmCallbacks cb;
  cb.residual = [this](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    try {
      r = residuals(x);
      return true;
    } catch (const IntegrationError&) {
      return false;
    } catch (const ConstraintBoundaryError&) {
      return false;
    } catch (const SingularityError&) {
      return false;
    }
  };
  cb.residual_and_jacobian = [this](const Eigen::VectorXd& x,
                                    Eigen::VectorXd& r,
                                    Eigen::SparseMatrix<double>& J) {
    try {
      BlockJacobian bj;
      r = residuals_and_jacobian(x, bj);
      J = bj.sparse();
      return true;
    } catch (const IntegrationError&) {
      return false;
    } catch (const ConstraintBoundaryError&) {
      return false;
    } catch (const SingularityError&) {
      return false;
    }
  };

  ShootingSolveResult out;
  out.lm = levenberg_marquardt(cb, initial_guess, lm_cfg);
  out.unknowns = out.lm.x;
  out.segment_integrations = segment_integrations_;
  return out;
}

Trajectory MultipleShooting::integrate_trajectory(
    const Eigen::VectorXd& u) const {
  const int n = layout_.n;
  const int sd = layout_.state_dim;
  const double tf = final_time_of(u);
  const FlowField flow = problem_.flow();

  Eigen::VectorXd z0_first;
  problem_.initial_state(u.segment(layout_.u1_offset(), layout_.k1), z0_first,
                         nullptr);

  std::vector<DenseOutput> pieces(static_cast<std::size_t>(n));
  parallel_for(n, [&](int seg) {
    const double tau0 = grid_.nodes[static_cast<std::size_t>(seg)];
    const double tau1 = grid_.nodes[static_cast<std::size_t>(seg) + 1];
    Eigen::VectorXd z =
        seg == 0 ? z0_first
                 : u.segment(layout_.ui_offset(seg + 1), sd).eval();
    DenseOutput dense(sd);
    integrate_flow(flow, tf, z.data(), tau0, tau1, config_.integrator, &dense);
    pieces[static_cast<std::size_t>(seg)] = std::move(dense);
  });

  Trajectory traj;
  traj.tf = tf;
  traj.dense = DenseOutput(sd);
  for (auto& p : pieces) traj.dense.append(p);
  return traj;
}

Eigen::VectorXd MultipleShooting::unknowns_from_trajectory(
    const Trajectory& traj, const Eigen::VectorXd& source_unknowns,
    const ShootingLayout& source_layout) const {
  if (source_layout.state_dim != layout_.state_dim ||
      source_layout.k1 != layout_.k1 ||
      source_layout.free_tf != layout_.free_tf)
    throw DimensionMismatch("incompatible source layout for warm start");
  Eigen::VectorXd u(layout_.dim());
  if (layout_.free_tf) u[0] = source_unknowns[0];
  u.segment(layout_.u1_offset(), layout_.k1) =
      source_unknowns.segment(source_layout.u1_offset(), layout_.k1);
  for (int i = 2; i <= layout_.n; ++i) {
    const double tau = grid_.nodes[static_cast<std::size_t>(i - 1)];
    const std::vector<double> z = traj.dense.eval(tau);
    u.segment(layout_.ui_offset(i), layout_.state_dim) =
        Eigen::Map<const Eigen::VectorXd>(z.data(), layout_.state_dim);
  }
  return u;
}

}  // namespace pdg
