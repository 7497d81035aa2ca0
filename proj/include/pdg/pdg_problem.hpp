#pragma once

// Concrete fuel- and time-optimal powered-descent problems: the combined
// 28-dim state/costate flow, boundary conditions, transversality, and the
// objective-specific terminal residuals.

#include <array>

#include "pdg/necessary_conditions.hpp"
#include "pdg/rocket_model.hpp"
#include "pdg/tpbvp.hpp"

namespace pdg {

enum class ObjectiveKind { kFuelOptimal, kTimeOptimal };

// Default boundary values; the final quaternion is stored renormalized.
struct BoundaryConditions {
  Vec3<double> r0 = {0.5, 4.0, 4.0};
  Vec3<double> v0 = {0.0, -4.0, 0.0};
  Vec3<double> w0 = {0.0, 0.0, 0.0};
  double m0 = 2.0;
  Vec3<double> rf = {0.0, 0.0, 0.01};
  Vec3<double> vf = {0.0, 0.0, 0.0};
  Vec4<double> qf = {0.0, 0.0, 0.01, 1.0};  // renormalized in validate()
  Vec3<double> wf = {0.0, 0.0, 0.0};

  void validate() {
    if (value_of(norm(qf)) == 0.0)
      throw ConfigError("final quaternion must be nonzero");
    qf = normalize_quat(qf);
    if (rf[0] == 0.0 && rf[1] == 0.0 && rf[2] == 0.0)
      throw ConfigError(
          "final position must be offset from the origin (glideslope "
          "singularity)");
    if (!(m0 > 0.0)) throw ConfigError("initial mass must be positive");
  }
};

// Combined state/costate rate for the scaled TPBVP, generic over the scalar.
template <class S>
std::array<S, 28> pdg_rate(const std::array<S, 28>& z,
                           const SmoothingParams& rho, const ModelParams& p,
                           CostateMode mode) {
  std::array<S, 14> xa, la;
  for (int i = 0; i < 14; ++i) {
    xa[i] = z[i];
    la[i] = z[14 + i];
  }
  const FullState<S> x = FullState<S>::from_array(xa);
  const Costate<S> l = Costate<S>::from_array(la);

  const auto ev = closed_loop_controls(x, l, rho, p);
  const std::array<S, 14> xdot = eom(x, ev.u, p);
  const std::array<S, 14> ldot = costate_rates(x, l, rho, p, mode);

  std::array<S, 28> dz;
  for (int i = 0; i < 14; ++i) {
    dz[i] = xdot[i];
    dz[14 + i] = ldot[i];
  }
  return dz;
}

class PdgProblem : public TpbvpProblem {
 public:
  PdgProblem(ObjectiveKind kind, ModelParams params, BoundaryConditions bcs,
             SmoothingParams rho,
             CostateMode mode = CostateMode::kTotalDerivative)
      : kind_(kind), params_(params), bcs_(bcs), rho_(rho), mode_(mode) {
    params_.validate();
    bcs_.validate();
  }

  ObjectiveKind objective() const { return kind_; }
  const ModelParams& params() const { return params_; }
  const BoundaryConditions& boundary() const { return bcs_; }
  const SmoothingParams& smoothing() const { return rho_; }
  CostateMode costate_mode() const { return mode_; }

  void set_smoothing(const SmoothingParams& rho) { rho_ = rho; }
  void set_params(const ModelParams& p) {
    params_ = p;
    params_.validate();
  }
  void set_costate_mode(CostateMode m) { mode_ = m; }

  int state_dim() const override { return 28; }
  int initial_unknown_dim() const override { return 14; }
  bool free_final_time() const override { return true; }

  // u1 = [lambda_r(0), lambda_v(0), q(0), lambda_w(0), lambda_m(0)]; the
  // quaternion block is renormalized here (and the Jacobian differentiates
  // through the renormalization), the remaining states come from the fixed
  // initial boundary conditions with lambda_q(0) = 0 by transversality.
  void initial_state(const Eigen::VectorXd& u1, Eigen::VectorXd& z0,
                     Eigen::MatrixXd* dz0_du1) const override {
    if (u1.size() != 14) throw DimensionMismatch("u1 must have 14 entries");
    z0.setZero(28);
    for (int i = 0; i < 3; ++i) {
      z0[i] = bcs_.r0[i];
      z0[3 + i] = bcs_.v0[i];
      z0[10 + i] = bcs_.w0[i];
    }
    z0[13] = bcs_.m0;
    const Eigen::Vector4d uq = u1.segment<4>(6);
    const double nq = uq.norm();
    if (nq < 1e-12)
      throw SingularityError("initial quaternion unknowns have zero norm");
    z0.segment<4>(6) = uq / nq;
    z0.segment<3>(14) = u1.segment<3>(0);   // lambda_r
    z0.segment<3>(17) = u1.segment<3>(3);   // lambda_v
    // lambda_q(0) = 0 (rows 20..23 stay zero)
    z0.segment<3>(24) = u1.segment<3>(10);  // lambda_w
    z0[27] = u1[13];                        // lambda_m

    if (dz0_du1) {
      dz0_du1->setZero(28, 14);
      const Eigen::Vector4d qhat = uq / nq;
      const Eigen::Matrix4d dnorm =
          (Eigen::Matrix4d::Identity() - qhat * qhat.transpose()) / nq;
      dz0_du1->block<4, 4>(6, 6) = dnorm;
      dz0_du1->block<3, 3>(14, 0).setIdentity();
      dz0_du1->block<3, 3>(17, 3).setIdentity();
      dz0_du1->block<3, 3>(24, 10).setIdentity();
      (*dz0_du1)(27, 13) = 1.0;
    }
  }

  void rate(const double* z, double* dz) const override {
    std::array<double, 28> za;
    std::copy_n(z, 28, za.begin());
    const auto d = pdg_rate(za, rho_, params_, mode_);
    std::copy_n(d.begin(), 28, dz);
  }

  void rate_and_jacobian(const double* z, double* dz,
                         double* jac) const override {
    using D = Dual<double, 28>;
    std::array<D, 28> za;
    for (int i = 0; i < 28; ++i) za[i] = D::variable(z[i], i);
    const auto d = pdg_rate(za, rho_, params_, mode_);
    for (int i = 0; i < 28; ++i) {
      dz[i] = d[i].val;
      for (int j = 0; j < 28; ++j) jac[j * 28 + i] = d[i].der[j];
    }
  }

  // psi = [r(1)-rf, v(1)-vf, q(1)-qf, w(1)-wf, lambda_m(1)+1, H(1)] for the
  // fuel-optimal objective; the time-optimal one ends [lambda_m(1), H(1)+1].
  void terminal_residual(const Eigen::VectorXd& z1, Eigen::VectorXd& psi,
                         Eigen::MatrixXd* dpsi_dz) const override {
    psi.resize(15);
    for (int i = 0; i < 3; ++i) {
      psi[i] = z1[i] - bcs_.rf[i];
      psi[3 + i] = z1[3 + i] - bcs_.vf[i];
      psi[10 + i] = z1[10 + i] - bcs_.wf[i];
    }
    for (int i = 0; i < 4; ++i) psi[6 + i] = z1[6 + i] - bcs_.qf[i];
    psi[13] = kind_ == ObjectiveKind::kFuelOptimal ? z1[27] + 1.0 : z1[27];

    if (dpsi_dz) {
      dpsi_dz->setZero(15, 28);
      for (int i = 0; i < 13; ++i) (*dpsi_dz)(i, i) = 1.0;
      (*dpsi_dz)(13, 27) = 1.0;
    }

    if (!dpsi_dz) {
      std::array<double, 28> za;
      for (int i = 0; i < 28; ++i) za[i] = z1[i];
      psi[14] = hamiltonian_of(za);
    } else {
      using D = Dual<double, 28>;
      std::array<D, 28> za;
      for (int i = 0; i < 28; ++i) za[i] = D::variable(z1[i], i);
      const D h = hamiltonian_of(za);
      psi[14] = h.val;
      for (int j = 0; j < 28; ++j) (*dpsi_dz)(14, j) = h.der[j];
    }
    if (kind_ == ObjectiveKind::kTimeOptimal) psi[14] += 1.0;
  }

  // Closed-loop Hamiltonian of a packed 28-vector.
  template <class S>
  S hamiltonian_of(const std::array<S, 28>& z) const {
    std::array<S, 14> xa, la;
    for (int i = 0; i < 14; ++i) {
      xa[i] = z[i];
      la[i] = z[14 + i];
    }
    return hamiltonian_closed_loop(FullState<S>::from_array(xa),
                                   Costate<S>::from_array(la), rho_, params_);
  }

 private:
  ObjectiveKind kind_;
  ModelParams params_;
  BoundaryConditions bcs_;
  SmoothingParams rho_;
  CostateMode mode_;
};

}  // namespace pdg
