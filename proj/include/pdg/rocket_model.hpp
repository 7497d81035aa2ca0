#pragma once

// 6DOF rocket model: reference frames, quaternion kinematics, drag, equations
// of motion, and the state-path constraint functions. All quantities are in
// nondimensional units (LU, TU, MU, FU = MU*LU/TU^2); angles in radians.

#include <array>
#include <cmath>

#include "pdg/errors.hpp"
#include "pdg/smallvec.hpp"

namespace pdg {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

// Physical constants and constraint bounds. Defaults are the reference
// problem's parameter set.
struct ModelParams {
  double m_wet = 2.0;       // [MU]
  double m_dry = 1.0;       // [MU]
  double drag_coeff = 0.1;  // C_D [-]
  double atm_density = 1.0; // [MU/LU^2]
  double ref_area = 0.5;    // S [LU^2]
  double thrust_min = 1.0;  // [FU]
  double thrust_max = 5.0;  // [FU]
  double isp = 294.2;       // [TU]
  double g0 = 1.0;          // [LU/TU^2]
  Vec3<double> inertia = {0.01, 0.01, 0.01};      // J diagonal [MU*LU^2]
  Vec3<double> gimbal_point = {0.0, 0.0, -0.01};  // r_T, body frame [LU]
  double gamma_min = deg2rad(20.0);   // glideslope lower bound
  double theta_max = deg2rad(90.0);   // tilt upper bound
  double delta_max = deg2rad(20.0);   // gimbal upper bound
  double omega_max = deg2rad(60.0);   // angular rate bound [rad/TU]

  void validate() const {
    if (!(0.0 < thrust_min && thrust_min < thrust_max))
      throw ConfigError("require 0 < T_min < T_max");
    if (!(0.0 < m_dry && m_dry < m_wet))
      throw ConfigError("require 0 < m_dry < m_wet");
    if (!(isp > 0.0 && g0 > 0.0)) throw ConfigError("require I_sp, g0 > 0");
    for (double a : {gamma_min, theta_max, delta_max})
      if (!(a > 0.0 && a < kPi))
        throw ConfigError("angle bounds must lie in (0, pi)");
    if (!(omega_max > 0.0)) throw ConfigError("require omega_max > 0");
    for (double j : inertia)
      if (!(j > 0.0)) throw ConfigError("inertia entries must be positive");
  }
};

// 14-dim rocket state. Quaternion is scalar-first [q0, q1, q2, q3].
template <class S>
struct FullState {
  Vec3<S> r{};
  Vec3<S> v{};
  Vec4<S> q{1.0, 0.0, 0.0, 0.0};
  Vec3<S> w{};
  S m{};

  static FullState from_array(const std::array<S, 14>& z) {
    FullState x;
    x.r = {z[0], z[1], z[2]};
    x.v = {z[3], z[4], z[5]};
    x.q = {z[6], z[7], z[8], z[9]};
    x.w = {z[10], z[11], z[12]};
    x.m = z[13];
    return x;
  }
  std::array<S, 14> to_array() const {
    return {r[0], r[1], r[2], v[0], v[1], v[2], q[0],
            q[1], q[2], q[3], w[0], w[1], w[2], m};
  }
};

template <class S>
struct ControlInput {
  S thrust{};
  Vec3<S> alpha{};  // body-frame steering unit vector
};

// DCM transforming body-frame vectors into the inertial frame (transpose of
// the inertial-to-body matrix). Caller guarantees ||q|| = 1.
template <class S>
Mat3<S> dcm_body_to_inertial(const Vec4<S>& q) {
  const S& q0 = q[0];
  const S& q1 = q[1];
  const S& q2 = q[2];
  const S& q3 = q[3];
  Mat3<S> c;  // inertial-to-body, then transposed on return
  c[0][0] = 1.0 - 2.0 * (q2 * q2 + q3 * q3);
  c[0][1] = 2.0 * (q1 * q2 + q0 * q3);
  c[0][2] = 2.0 * (q1 * q3 - q0 * q2);
  c[1][0] = 2.0 * (q1 * q2 - q0 * q3);
  c[1][1] = 1.0 - 2.0 * (q1 * q1 + q3 * q3);
  c[1][2] = 2.0 * (q2 * q3 + q0 * q1);
  c[2][0] = 2.0 * (q1 * q3 + q0 * q2);
  c[2][1] = 2.0 * (q2 * q3 - q0 * q1);
  c[2][2] = 1.0 - 2.0 * (q1 * q1 + q2 * q2);
  return transpose(c);
}

// Drag force in the inertial frame: D = -1/2 rho ||v|| v S C_D.
template <class S>
Vec3<S> drag_force(const Vec3<S>& v, const ModelParams& p) {
  const S v2 = dot(v, v);
  if (value_of(v2) == 0.0) return Vec3<S>{};
  const S coeff = -0.5 * p.atm_density * p.ref_area * p.drag_coeff * sqrt(v2);
  return coeff * v;
}

// 4x4 quaternion-rate matrix applied to q: qdot = 1/2 Omega(w) q.
template <class S>
Vec4<S> quat_rate(const Vec4<S>& q, const Vec3<S>& w) {
  const S& wx = w[0];
  const S& wy = w[1];
  const S& wz = w[2];
  return {S(0.5) * (-wx * q[1] - wy * q[2] - wz * q[3]),
          S(0.5) * (wx * q[0] + wz * q[2] - wy * q[3]),
          S(0.5) * (wy * q[0] - wz * q[1] + wx * q[3]),
          S(0.5) * (wz * q[0] + wy * q[1] - wx * q[2])};
}

// 6DOF equations of motion: returns [rdot, vdot, qdot, wdot, mdot].
template <class S>
std::array<S, 14> eom(const FullState<S>& x, const ControlInput<S>& u,
                      const ModelParams& p) {
  const Mat3<S> c_ib = dcm_body_to_inertial(x.q);
  const Vec3<S> g = {S(0.0), S(0.0), S(-p.g0)};
  const S inv_m = S(1.0) / x.m;

  const Vec3<S> thrust_inertial = matvec(c_ib, u.alpha);
  const Vec3<S> vdot =
      g + (u.thrust * inv_m) * thrust_inertial + inv_m * drag_force(x.v, p);

  const Vec4<S> qdot = quat_rate(x.q, x.w);

  const Vec3<S> rt = promote<S>(p.gimbal_point);
  const Vec3<S> jw = {p.inertia[0] * x.w[0], p.inertia[1] * x.w[1],
                      p.inertia[2] * x.w[2]};
  const Vec3<S> torque = cross(rt, u.thrust * u.alpha) - cross(x.w, jw);
  const Vec3<S> wdot = {torque[0] / p.inertia[0], torque[1] / p.inertia[1],
                        torque[2] / p.inertia[2]};

  const S mdot = -u.thrust / (p.isp * p.g0);

  return {x.v[0], x.v[1], x.v[2], vdot[0], vdot[1], vdot[2], qdot[0],
          qdot[1], qdot[2], qdot[3], wdot[0], wdot[1], wdot[2], mdot};
}

// Glideslope angle gamma = atan(r_z / sqrt(r_x^2 + r_y^2)) in (-pi/2, pi/2].
template <class S>
S glideslope_angle(const Vec3<S>& r) {
  if (value_of(r[0]) == 0.0 && value_of(r[1]) == 0.0 &&
      value_of(r[2]) == 0.0)
    throw DegeneratePositionError("glideslope angle undefined at r = 0");
  return atan2(r[2], sqrt(r[0] * r[0] + r[1] * r[1]));
}

// Tilt angle theta = acos(1 - 2(q1^2 + q2^2)) in [0, pi]. The acos argument
// is clamped by at most 1e-12 against rounding; larger violations throw.
template <class S>
S tilt_angle(const Vec4<S>& q) {
  S arg = 1.0 - 2.0 * (q[1] * q[1] + q[2] * q[2]);
  const double a = value_of(arg);
  if (a > 1.0 || a < -1.0) {
    if (a > 1.0 + 1e-12 || a < -1.0 - 1e-12)
      throw PdgError("tilt angle argument outside [-1,1] beyond tolerance");
    arg = arg - (a > 1.0 ? (a - 1.0) : (a + 1.0));
  }
  return acos(arg);
}

// State-only path constraints in the form S_i <= 0:
//   S1 = w.w - omega_max^2, S2 = gamma_min - gamma, S3 = theta - theta_max.
template <class S>
std::array<S, 3> sopic_values(const FullState<S>& x, const ModelParams& p) {
  const S s1 = dot(x.w, x.w) - p.omega_max * p.omega_max;
  const S s2 = p.gamma_min - glideslope_angle(x.r);
  const S s3 = tilt_angle(x.q) - p.theta_max;
  return {s1, s2, s3};
}

template <class S>
Vec4<S> normalize_quat(const Vec4<S>& q) {
  const S n = norm(q);
  return {q[0] / n, q[1] / n, q[2] / n, q[3] / n};
}

}  // namespace pdg
