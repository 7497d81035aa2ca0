#pragma once

// First-order necessary conditions: secant interior penalties, variational
// Hamiltonian, regularized closed-form thrust/steering laws, costate rates
// via forward AD, and the a-posteriori multiplier reconstruction.

#include <array>
#include <cmath>

#include "pdg/errors.hpp"
#include "pdg/rocket_model.hpp"
#include "pdg/smallvec.hpp"

namespace pdg {

// Costate vector dual to FullState, same component ordering.
template <class S>
struct Costate {
  Vec3<S> lr{};
  Vec3<S> lv{};
  Vec4<S> lq{};
  Vec3<S> lw{};
  S lm{};

  static Costate from_array(const std::array<S, 14>& a) {
    Costate l;
    l.lr = {a[0], a[1], a[2]};
    l.lv = {a[3], a[4], a[5]};
    l.lq = {a[6], a[7], a[8], a[9]};
    l.lw = {a[10], a[11], a[12]};
    l.lm = a[13];
    return l;
  }
  std::array<S, 14> to_array() const {
    return {lr[0], lr[1], lr[2], lv[0], lv[1], lv[2], lq[0],
            lq[1], lq[2], lq[3], lw[0], lw[1], lw[2], lm};
  }
};

// Continuation weights rho = [rho_T, rho_delta, rho_omega, rho_gamma,
// rho_theta]. A value of 0 disables the corresponding term exactly.
struct SmoothingParams {
  double rho_thrust = 0.0;
  double rho_gimbal = 0.0;
  double rho_omega = 0.0;
  double rho_gamma = 0.0;
  double rho_theta = 0.0;

  std::array<double, 5> to_array() const {
    return {rho_thrust, rho_gimbal, rho_omega, rho_gamma, rho_theta};
  }
};

// P_i rewrites of S_i <= 0 into P_i <= 1, matching the penalty arguments.
template <class S>
S sopic_p1(const FullState<S>& x, const ModelParams& p) {
  return dot(x.w, x.w) / (p.omega_max * p.omega_max);
}
template <class S>
S sopic_p2(const FullState<S>& x, const ModelParams& p) {
  return p.gamma_min / glideslope_angle(x.r);
}
template <class S>
S sopic_p3(const FullState<S>& x, const ModelParams& p) {
  return tilt_angle(x.q) / p.theta_max;
}

namespace detail {
inline void check_interior(double p_val, int index) {
  if (p_val >= 1.0)
    throw ConstraintBoundaryError(
        "secant penalty argument reached its singular boundary (P_" +
            std::to_string(index) + " >= 1)",
        index, p_val);
}
}  // namespace detail

// Guard for the tilt derivative singularity at q1 = q2 = 0: the derivative
// d(theta)/dq blows up there, so differentiating the active tilt penalty is
// undefined. Converged problems stay off this set via the offset boundary
// conditions.
template <class S>
void check_tilt_singularity(const FullState<S>& x, double rho_theta) {
  if (rho_theta <= 0.0) return;
  const double w =
      1.0 - 2.0 * (value_of(x.q[1]) * value_of(x.q[1]) +
                   value_of(x.q[2]) * value_of(x.q[2]));
  if (1.0 - w * w < 1e-24)
    throw SingularityError(
        "tilt-angle derivative singular (q1 = q2 = 0) with rho_theta > 0");
}

// L = rho_omega*sec(pi/2 P1) + rho_gamma*sec(pi/2 P2) + rho_theta*sec(pi/2 P3)
// with inactive (rho = 0) terms skipped exactly.
template <class S>
S penalty_lagrangian(const FullState<S>& x, const SmoothingParams& rho,
                     const ModelParams& p) {
  S lag(0.0);
  if (rho.rho_omega > 0.0) {
    const S p1 = sopic_p1(x, p);
    detail::check_interior(value_of(p1), 1);
    lag += rho.rho_omega * sec(0.5 * kPi * p1);
  }
  if (rho.rho_gamma > 0.0) {
    const S gamma = glideslope_angle(x.r);
    if (value_of(gamma) <= 0.0)
      throw ConstraintBoundaryError(
          "glideslope angle non-positive with rho_gamma > 0", 2,
          value_of(gamma));
    const S p2 = p.gamma_min / gamma;
    detail::check_interior(value_of(p2), 2);
    lag += rho.rho_gamma * sec(0.5 * kPi * p2);
  }
  if (rho.rho_theta > 0.0) {
    check_tilt_singularity(x, rho.rho_theta);
    const S p3 = sopic_p3(x, p);
    detail::check_interior(value_of(p3), 3);
    lag += rho.rho_theta * sec(0.5 * kPi * p3);
  }
  return lag;
}

// Body-frame vector p with p^T = lambda_v^T C_{I<-B}/m + lambda_w^T J^-1 rT^x.
// This is the negative of the primer vector: the unconstrained optimal
// steering is -p/||p||.
template <class S>
Vec3<S> primer(const FullState<S>& x, const Costate<S>& l,
               const ModelParams& p) {
  const Mat3<S> c_bi = transpose(dcm_body_to_inertial(x.q));
  const Vec3<S> translational = (S(1.0) / x.m) * matvec(c_bi, l.lv);
  const Vec3<S> jinv_lw = {l.lw[0] / p.inertia[0], l.lw[1] / p.inertia[1],
                           l.lw[2] / p.inertia[2]};
  const Vec3<S> rt = promote<S>(p.gimbal_point);
  // (lambda_w^T J^-1 rT^x)^T = -rT^x J^-1 lambda_w
  return translational - cross(rt, jinv_lw);
}

// Thrust switching function S_T = -p.alpha + lambda_m/(Isp g0). Sign selects
// the bang arc: S_T > 0 -> T_max, S_T < 0 -> T_min.
template <class S>
S thrust_switching(const Vec3<S>& p, const Vec3<S>& alpha, const S& lambda_m,
                   const ModelParams& params) {
  return -dot(p, alpha) + lambda_m / (params.isp * params.g0);
}

// L2-regularized thrust magnitude; exact bang-bang for rho_thrust = 0.
template <class S>
S regularized_thrust(const S& s_thrust, double rho_thrust,
                     const ModelParams& p) {
  const double mid = 0.5 * (p.thrust_max + p.thrust_min);
  const double halfspan = 0.5 * (p.thrust_max - p.thrust_min);
  if (rho_thrust == 0.0) {
    const double s = value_of(s_thrust);
    if (s > 0.0) return S(p.thrust_max);
    if (s < 0.0) return S(p.thrust_min);
    return S(mid);
  }
  return mid + halfspan * (s_thrust /
                           sqrt(s_thrust * s_thrust + rho_thrust * rho_thrust));
}

// Gimbal-constraint switching scalar S_delta = p_z - cot(d_max)*sqrt(px^2+py^2)
// (reported in diagnostics) and the quadratic root mu4+ = p_z +
// cot(d_max)*sqrt(px^2+py^2). The closed-loop law activates on the sign of
// mu4+: the unconstrained direction -p/||p|| satisfies the cone exactly when
// mu4+ <= 0, and mu4+ is the KKT multiplier when positive.
template <class S>
S mu4_plus(const Vec3<S>& p, const ModelParams& params) {
  const S lat2 = p[0] * p[0] + p[1] * p[1];
  if (value_of(lat2) == 0.0) return p[2];
  return p[2] + sqrt(lat2) / std::tan(params.delta_max);
}

template <class S>
S gimbal_switching(const Vec3<S>& p, const ModelParams& params) {
  const S lat2 = p[0] * p[0] + p[1] * p[1];
  if (value_of(lat2) == 0.0) return p[2];
  return p[2] - sqrt(lat2) / std::tan(params.delta_max);
}

// Smooth blend mu4~ = (mu4+/2)(1 + s/sqrt(s^2 + rho^2)) of the piecewise
// multiplier, driven by the switching scalar s passed by the caller.
template <class S>
S regularized_mu4(const S& s, const S& mu4p, double rho_gimbal) {
  if (rho_gimbal == 0.0) {
    const double sv = value_of(s);
    if (sv > 0.0) return mu4p;
    if (sv < 0.0) return S(0.0);
    return 0.5 * mu4p;
  }
  return 0.5 * mu4p *
         (1.0 + s / sqrt(s * s + rho_gimbal * rho_gimbal));
}

// Optimal steering alpha* = -(p - mu4 z_B)/||p - mu4 z_B||.
template <class S>
Vec3<S> optimal_steering(const Vec3<S>& p, const S& mu4) {
  const Vec3<S> d = {p[0], p[1], p[2] - mu4};
  const S n = norm(d);
  if (value_of(n) < 1e-14)
    throw SingularityError(
        "steering undefined: primer vector cancels the gimbal shift");
  return {-d[0] / n, -d[1] / n, -d[2] / n};
}

template <class S>
struct ControlLawEval {
  Vec3<S> p{};        // primer-opposite vector, body frame
  S mu4p{};           // mu4+ root (also the activation scalar)
  S s_gimbal{};       // S_delta, printed convention (diagnostic)
  S mu4{};            // applied multiplier (smoothed or piecewise)
  S s_thrust{};       // S_T
  ControlInput<S> u{};
};

// Closed-loop regularized control law (exact piecewise law when the
// corresponding rho vanishes). The degenerate p = 0 point leaves H
// independent of the steering direction; +z_B is returned there so the
// composition stays evaluable (e.g. at lambda = 0).
template <class S>
ControlLawEval<S> closed_loop_controls(const FullState<S>& x,
                                       const Costate<S>& l,
                                       const SmoothingParams& rho,
                                       const ModelParams& params) {
  ControlLawEval<S> ev;
  ev.p = primer(x, l, params);
  ev.mu4p = mu4_plus(ev.p, params);
  ev.s_gimbal = gimbal_switching(ev.p, params);
  ev.mu4 = regularized_mu4(ev.mu4p, ev.mu4p, rho.rho_gimbal);

  const Vec3<S> d = {ev.p[0], ev.p[1], ev.p[2] - ev.mu4};
  if (value_of(dot(d, d)) < 1e-28) {
    if (value_of(dot(ev.p, ev.p)) < 1e-28) {
      ev.u.alpha = {S(0.0), S(0.0), S(1.0)};
    } else {
      throw SingularityError(
          "steering undefined: primer vector cancels the gimbal shift");
    }
  } else {
    ev.u.alpha = optimal_steering(ev.p, ev.mu4);
  }

  ev.s_thrust = thrust_switching(ev.p, ev.u.alpha, l.lm, params);
  ev.u.thrust = regularized_thrust(ev.s_thrust, rho.rho_thrust, params);
  return ev;
}

// Variational Hamiltonian H = L + lambda^T f(x, u), explicit control.
template <class S>
S hamiltonian(const FullState<S>& x, const Costate<S>& l,
              const ControlInput<S>& u, const SmoothingParams& rho,
              const ModelParams& params) {
  const std::array<S, 14> f = eom(x, u, params);
  return penalty_lagrangian(x, rho, params) + dot(l.to_array(), f);
}

// H with the regularized control law substituted in.
template <class S>
S hamiltonian_closed_loop(const FullState<S>& x, const Costate<S>& l,
                          const SmoothingParams& rho,
                          const ModelParams& params) {
  const auto ev = closed_loop_controls(x, l, rho, params);
  return hamiltonian(x, l, ev.u, rho, params);
}

// Whether the costate gradient differentiates through the control laws
// (total derivative) or holds the controls fixed (the exact costate equation
// of the smoothed problem). The two agree on extremals up to O(rho) terms
// concentrated near switching surfaces.
enum class CostateMode { kTotalDerivative, kFrozenControls };

// lambda_dot = -dH/dx evaluated by AD through the chosen composition.
template <class S>
std::array<S, 14> costate_rates(const FullState<S>& x, const Costate<S>& l,
                                const SmoothingParams& rho,
                                const ModelParams& params,
                                CostateMode mode = CostateMode::kTotalDerivative) {
  check_tilt_singularity(x, rho.rho_theta);

  using D = Dual<S, 14>;
  const std::array<S, 14> xa = x.to_array();
  std::array<D, 14> xd;
  for (int i = 0; i < 14; ++i) xd[i] = D::variable(xa[i], i);
  const FullState<D> xs = FullState<D>::from_array(xd);

  const std::array<S, 14> la = l.to_array();
  std::array<D, 14> ld;
  for (int i = 0; i < 14; ++i) ld[i] = D(la[i]);
  const Costate<D> ls = Costate<D>::from_array(ld);

  ControlInput<D> u;
  if (mode == CostateMode::kTotalDerivative) {
    u = closed_loop_controls(xs, ls, rho, params).u;
  } else {
    const auto ev = closed_loop_controls(x, l, rho, params);
    u.thrust = D(ev.u.thrust);
    u.alpha = {D(ev.u.alpha[0]), D(ev.u.alpha[1]), D(ev.u.alpha[2])};
  }

  const D h = hamiltonian(xs, ls, u, rho, params);
  std::array<S, 14> ldot;
  for (int i = 0; i < 14; ++i) ldot[i] = -h.der[i];
  return ldot;
}

// Conjecture-1 multiplier reconstruction eta~ = -rho sec(pi/2 P)/S for the
// directly-adjoined SOPIC multipliers. Defined on the strict interior S < 0.
inline double eta_tilde(double s_value, double p_value, double rho) {
  if (rho == 0.0) return 0.0;
  if (s_value == 0.0)
    throw ConstraintBoundaryError(
        "multiplier reconstruction blows up at the constraint boundary", -1,
        p_value);
  if (s_value > 0.0)
    throw ConstraintBoundaryError(
        "multiplier reconstruction outside the feasible interior", -1,
        p_value);
  return -rho * sec(0.5 * kPi * p_value) / s_value;
}

}  // namespace pdg
