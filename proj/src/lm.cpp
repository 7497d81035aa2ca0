#include "pdg/lm.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pdg/errors.hpp"

namespace pdg {

namespace {

void update_column_scales(const Eigen::SparseMatrix<double>& jac,
                          Eigen::VectorXd& d) {
  for (int c = 0; c < jac.outerSize(); ++c) {
    double s = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(jac, c); it; ++it)
      s += it.value() * it.value();
    d[c] = std::max(d[c], std::sqrt(s));
  }
  for (int c = 0; c < d.size(); ++c)
    if (d[c] <= 0.0) d[c] = 1.0;
}

}  // namespace

LmResult levenberg_marquardt(const LmCallbacks& cb, Eigen::VectorXd x0,
                             const LmConfig& cfg) {
  LmResult res;
  res.x = std::move(x0);
  const int n = static_cast<int>(res.x.size());

  Eigen::VectorXd r;
  Eigen::SparseMatrix<double> jac;
  if (!cb.residual_and_jacobian(res.x, r, jac))
    throw PdgError("levenberg_marquardt: starting point is infeasible");

  Eigen::VectorXd scale = Eigen::VectorXd::Zero(n);
  update_column_scales(jac, scale);

  double mu = cfg.mu0;
  double nu = 2.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool pattern_analyzed = false;

  auto record = [&](double rinf) {
    res.residual_history.push_back(rinf);
    res.damping_history.push_back(mu);
  };

  double rinf = r.lpNorm<Eigen::Infinity>();
  record(rinf);
  if (rinf <= cfg.function_tol) {
    res.converged = true;
    res.residual_inf = rinf;
    res.residual_two = r.norm();
    res.message = "converged at the starting point";
    return res;
  }

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    res.iterations = iter + 1;
    const Eigen::VectorXd g = jac.transpose() * r;
    const Eigen::SparseMatrix<double> jtj =
        (jac.transpose() * jac).pruned();

    bool accepted = false;
    Eigen::VectorXd step;
    while (!accepted) {
      Eigen::SparseMatrix<double> hess = jtj;
      Eigen::SparseMatrix<double> damping(n, n);
      damping.reserve(Eigen::VectorXi::Constant(n, 1));
      for (int i = 0; i < n; ++i)
        damping.insert(i, i) = mu * scale[i] * scale[i];
      hess += damping;

      if (!pattern_analyzed) {
        ldlt.analyzePattern(hess);
        pattern_analyzed = true;
      }
      ldlt.factorize(hess);
      bool solved = ldlt.info() == Eigen::Success;
      if (solved) {
        step = ldlt.solve(-g);
        solved = step.allFinite();
      }
      if (!solved) {
        mu *= 10.0;
        nu = 2.0;
        if (mu > cfg.mu_max) {
          res.residual_inf = rinf;
          res.residual_two = r.norm();
          res.message = "damping exhausted (factorization failures)";
          return res;
        }
        continue;
      }

      // Try the full step, then backtrack along the same direction. For the
      // narrow valleys carved by the secant penalties a shortened Newton-ish
      // step outperforms re-damping (which bends toward the gradient).
      double t_accept = 0.0;
      Eigen::VectorXd r_trial;
      for (double t = 1.0; t >= 1.0 / 64.0; t *= 0.5) {
        Eigen::VectorXd r_try;
        const Eigen::VectorXd x_try = res.x + t * step;
        bool feasible = false;
        try {
          feasible = cb.residual(x_try, r_try) && r_try.allFinite();
        } catch (const PdgError&) {
          feasible = false;
        }
        if (feasible && r_try.norm() < r.norm()) {
          t_accept = t;
          r_trial.swap(r_try);
          break;
        }
      }

      if (t_accept > 0.0) {
        if (cfg.damping == LmDamping::kGainRatio) {
          if (t_accept == 1.0) {
            // Predicted reduction of F = 1/2||r||^2 by the damped model:
            // L(0) - L(step) = 1/2 (mu ||D step||^2 - g.step).
            double pred = 0.0;
            for (int i = 0; i < n; ++i)
              pred += mu * scale[i] * scale[i] * step[i] * step[i];
            pred = 0.5 * (pred - g.dot(step));
            const double actual =
                0.5 * (r.squaredNorm() - r_trial.squaredNorm());
            const double gain = pred > 0.0 ? actual / pred : 1.0;
            const double f = 1.0 - std::pow(2.0 * gain - 1.0, 3.0);
            mu *= std::max(1.0 / 3.0, f);
            mu = std::max(mu, cfg.mu_min);
          }
          // A backtracked accept keeps mu: the direction worked, the model
          // length did not.
          nu = 2.0;
        } else {
          mu = std::max(mu * 0.1, cfg.mu_min);
        }
        res.x += t_accept * step;
        r = r_trial;
        step *= t_accept;  // step-tolerance check sees the applied step
        accepted = true;
      } else {
        if (cfg.damping == LmDamping::kGainRatio) {
          mu = std::max(mu, 1e-10) * nu;
          nu *= 2.0;
        } else {
          mu *= 10.0;
        }
        if (mu > cfg.mu_max) {
          res.residual_inf = rinf;
          res.residual_two = r.norm();
          res.message = "damping exhausted (no acceptable trial step)";
          return res;
        }
      }
    }

    {
      const auto& d = ldlt.vectorD();
      const double dmax = d.cwiseAbs().maxCoeff();
      const double dmin = d.cwiseAbs().minCoeff();
      res.condition_estimate =
          dmin > 0.0 ? std::sqrt(dmax / dmin)
                     : std::numeric_limits<double>::infinity();
    }

    rinf = r.lpNorm<Eigen::Infinity>();
    record(rinf);
    if (cfg.verbose)
      std::fprintf(stderr, "  lm iter %3d  |r|_inf = %.3e  mu = %.1e\n",
                   res.iterations, rinf, mu);

    if (rinf <= cfg.function_tol) {
      res.converged = true;
      res.residual_inf = rinf;
      res.residual_two = r.norm();
      res.message = "converged";
      return res;
    }
    if (step.norm() <= cfg.step_tol * (1.0 + res.x.norm())) {
      res.residual_inf = rinf;
      res.residual_two = r.norm();
      res.message = "step tolerance reached with residual above tolerance";
      return res;
    }

    if (!cb.residual_and_jacobian(res.x, r, jac))
      throw PdgError("levenberg_marquardt: accepted point became infeasible");
    update_column_scales(jac, scale);
  }

  res.residual_inf = rinf;
  res.residual_two = r.norm();
  res.message = "iteration budget exhausted";
  return res;
}

}  // namespace pdg
