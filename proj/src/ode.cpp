#include "pdg/ode.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace pdg {

void DenseOutput::eval(double t, double* y) const {
  if (steps_.empty()) throw IntegrationError("dense output is empty", t);
  const double dir = steps_.front().h > 0.0 ? 1.0 : -1.0;
  // Binary search for the step containing t (clamp to the covered range).
  std::size_t lo = 0, hi = steps_.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const double t_end = steps_[mid].t0 + steps_[mid].h;
    if ((t - t_end) * dir > 0.0)
      lo = mid + 1;
    else
      hi = mid;
  }
  const Step& st = steps_[lo];
  const int n = dim_;
  const double s = (t - st.t0) / st.h;
  const double s1 = 1.0 - s;
  const double* con = st.con.data();
  for (int i = 0; i < n; ++i) {
    const double c8 = con[7 * n + i];
    double a = con[6 * n + i] + s * c8;
    a = con[5 * n + i] + s1 * a;
    a = con[4 * n + i] + s * a;
    a = con[3 * n + i] + s1 * a;
    a = con[2 * n + i] + s * a;
    a = con[n + i] + s1 * a;
    y[i] = con[i] + s * a;
  }
}

std::vector<std::pair<double, std::vector<double>>> DenseOutput::sample(
    int npoints) const {
  if (npoints < 2) throw PdgError("sample requires at least 2 points");
  std::vector<std::pair<double, std::vector<double>>> out;
  out.reserve(static_cast<std::size_t>(npoints));
  const double a = t_begin();
  const double b = t_end();
  for (int i = 0; i < npoints; ++i) {
    const double t = a + (b - a) * static_cast<double>(i) / (npoints - 1);
    out.emplace_back(t, eval(t));
  }
  return out;
}

void DenseOutput::append(const DenseOutput& other) {
  if (dim_ == 0) dim_ = other.dim_;
  if (dim_ != other.dim_)
    throw DimensionMismatch("dense output dimension mismatch on append");
  steps_.insert(steps_.end(), other.steps_.begin(), other.steps_.end());
}

namespace {

// Slices the leading `dim` components out of an augmented dense record.
DenseOutput slice_dense(const DenseOutput& full, int n_full, int dim) {
  DenseOutput out(dim);
  for (const auto& st : full.steps()) {
    DenseOutput::Step rec;
    rec.t0 = st.t0;
    rec.h = st.h;
    rec.con.resize(8 * static_cast<std::size_t>(dim));
    for (int blk = 0; blk < 8; ++blk)
      std::copy_n(st.con.data() + blk * n_full, dim,
                  rec.con.data() + blk * dim);
    out.push_step(std::move(rec));
  }
  return out;
}

}  // namespace

SensitivityResult integrate_with_sensitivities(const FlowField& flow,
                                               double tf, const double* z0,
                                               double tau0, double tau1,
                                               const IntegratorConfig& cfg,
                                               DenseOutput* dense_z) {
  const int n = flow.dim;
  const int naug = n + n * n + n;

  std::vector<double> y(static_cast<std::size_t>(naug), 0.0);
  std::copy_n(z0, n, y.begin());
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(n + i * n + i)] = 1.0;

  std::vector<double> fbuf(static_cast<std::size_t>(n));
  std::vector<double> abuf(static_cast<std::size_t>(n) * n);

  auto rhs = [&](double /*tau*/, const double* yy, double* dy) {
    const double* z = yy;
    const double* phi = yy + n;
    const double* psi = yy + n + n * n;
    double* dz = dy;
    double* dphi = dy + n;
    double* dpsi = dy + n + n * n;

    flow.rate_and_jacobian(z, fbuf.data(), abuf.data());
    for (int i = 0; i < n; ++i) dz[i] = tf * fbuf[i];
    // dPhi = tf * A * Phi (column by column), dPsi = tf * A * Psi + f.
    const double* A = abuf.data();
    for (int c = 0; c < n; ++c) {
      const double* pc = phi + c * n;
      double* dc = dphi + c * n;
      for (int i = 0; i < n; ++i) dc[i] = 0.0;
      for (int k = 0; k < n; ++k) {
        const double pkc = pc[k];
        if (pkc == 0.0) continue;
        const double* Ak = A + k * n;  // column k of A
        for (int i = 0; i < n; ++i) dc[i] += Ak[i] * pkc;
      }
      for (int i = 0; i < n; ++i) dc[i] *= tf;
    }
    for (int i = 0; i < n; ++i) dpsi[i] = 0.0;
    for (int k = 0; k < n; ++k) {
      const double pk = psi[k];
      if (pk == 0.0) continue;
      const double* Ak = A + k * n;
      for (int i = 0; i < n; ++i) dpsi[i] += Ak[i] * pk;
    }
    for (int i = 0; i < n; ++i) dpsi[i] = tf * dpsi[i] + fbuf[i];
  };

  SensitivityResult res;
  if (tau1 == tau0) {
    // Empty interval: Phi = I, Psi = 0 by the variational initial conditions.
    res.z1.assign(z0, z0 + n);
    res.phi.assign(y.begin() + n, y.begin() + n + n * n);
    res.psi.assign(static_cast<std::size_t>(n), 0.0);
    return res;
  }

  DenseOutput dense_full(naug);
  res.stats = integrate_ivp(rhs, naug, tau0, tau1, y.data(), cfg,
                            dense_z ? &dense_full : nullptr);
  res.z1.assign(y.begin(), y.begin() + n);
  res.phi.assign(y.begin() + n, y.begin() + n + n * n);
  res.psi.assign(y.begin() + n + n * n, y.end());
  if (dense_z) *dense_z = slice_dense(dense_full, naug, n);
  return res;
}

IntegrationStats integrate_flow(const FlowField& flow, double tf, double* z,
                                double tau0, double tau1,
                                const IntegratorConfig& cfg,
                                DenseOutput* dense) {
  const int n = flow.dim;
  std::vector<double> fbuf(static_cast<std::size_t>(n));
  auto rhs = [&](double /*tau*/, const double* yy, double* dy) {
    flow.rate(yy, fbuf.data());
    for (int i = 0; i < n; ++i) dy[i] = tf * fbuf[i];
  };
  if (tau1 == tau0) return {};
  return integrate_ivp(rhs, n, tau0, tau1, z, cfg, dense);
}

}  // namespace pdg
