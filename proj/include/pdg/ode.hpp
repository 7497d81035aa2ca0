#pragma once

// Adaptive Dormand-Prince 8(5,3) integration with 7th-order dense output,
// plus simultaneous propagation of the state-transition matrix Phi and the
// final-time sensitivity vector Psi for the scaled flow dz/dtau = tf*f(z).

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pdg/errors.hpp"

namespace pdg {

struct IntegratorConfig {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  long max_steps = 2000000;
  double initial_step = 0.0;  // 0 selects the automatic estimate
};

struct IntegrationStats {
  long steps_accepted = 0;
  long steps_rejected = 0;
  long rhs_evals = 0;
};

// Dense output: one 7th-order interpolant record per accepted step.
class DenseOutput {
 public:
  struct Step {
    double t0 = 0.0;
    double h = 0.0;
    std::vector<double> con;  // 8*n interpolation coefficients
  };

  DenseOutput() = default;
  explicit DenseOutput(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  bool empty() const { return steps_.empty(); }
  double t_begin() const { return steps_.front().t0; }
  double t_end() const { return steps_.back().t0 + steps_.back().h; }
  const std::vector<Step>& steps() const { return steps_; }

  void clear() { steps_.clear(); }
  void reserve(std::size_t n) { steps_.reserve(n); }
  void push_step(Step&& s) { steps_.push_back(std::move(s)); }

  // Evaluate the trajectory at t (clamped to the covered interval ends).
  void eval(double t, double* y) const;
  std::vector<double> eval(double t) const {
    std::vector<double> y(dim_);
    eval(t, y.data());
    return y;
  }

  // Uniform samples including both endpoints.
  std::vector<std::pair<double, std::vector<double>>> sample(int npoints) const;

  // Append another dense segment (times must continue monotonically).
  void append(const DenseOutput& other);

 private:
  int dim_ = 0;
  std::vector<Step> steps_;
};

namespace detail853 {

// Dormand-Prince 8(5,3) tableau (Hairer, Norsett & Wanner, dop853).
inline constexpr double c2 = 0.526001519587677318785587544488e-01;
inline constexpr double c3 = 0.789002279381515978178381316732e-01;
inline constexpr double c4 = 0.118350341907227396726757197510e+00;
inline constexpr double c5 = 0.281649658092772603273242802490e+00;
inline constexpr double c6 = 0.333333333333333333333333333333e+00;
inline constexpr double c7 = 0.25e+00;
inline constexpr double c8 = 0.307692307692307692307692307692e+00;
inline constexpr double c9 = 0.651282051282051282051282051282e+00;
inline constexpr double c10 = 0.6e+00;
inline constexpr double c11 = 0.857142857142857142857142857142e+00;
inline constexpr double c14 = 0.1e+00;
inline constexpr double c15 = 0.2e+00;
inline constexpr double c16 = 0.777777777777777777777777777778e+00;

inline constexpr double a21 = 5.26001519587677318785587544488e-2;
inline constexpr double a31 = 1.97250569845378994544595329183e-2;
inline constexpr double a32 = 5.91751709536136983633785987549e-2;
inline constexpr double a41 = 2.95875854768068491816892993775e-2;
inline constexpr double a43 = 8.87627564304205475450678981324e-2;
inline constexpr double a51 = 2.41365134159266685502369798665e-1;
inline constexpr double a53 = -8.84549479328286085344864962717e-1;
inline constexpr double a54 = 9.24834003261792003115737966543e-1;
inline constexpr double a61 = 3.7037037037037037037037037037e-2;
inline constexpr double a64 = 1.70828608729473871279604482173e-1;
inline constexpr double a65 = 1.25467687566822425016691814123e-1;
inline constexpr double a71 = 3.7109375e-2;
inline constexpr double a74 = 1.70252211019544039314978060272e-1;
inline constexpr double a75 = 6.02165389804559606850219397283e-2;
inline constexpr double a76 = -1.7578125e-2;
inline constexpr double a81 = 3.70920001185047927108779319836e-2;
inline constexpr double a84 = 1.70383925712239993810214054705e-1;
inline constexpr double a85 = 1.07262030446373284651809199168e-1;
inline constexpr double a86 = -1.53194377486244017527936158236e-2;
inline constexpr double a87 = 8.27378916381402288758473766002e-3;
inline constexpr double a91 = 6.24110958716075717114429577812e-1;
inline constexpr double a94 = -3.36089262944694129406857109825e0;
inline constexpr double a95 = -8.68219346841726006818189891453e-1;
inline constexpr double a96 = 2.75920996994467083049415600797e1;
inline constexpr double a97 = 2.01540675504778934086186788979e1;
inline constexpr double a98 = -4.34898841810699588477366255144e1;
inline constexpr double a101 = 4.77662536438264365890433908527e-1;
inline constexpr double a104 = -2.48811461997166764192642586468e0;
inline constexpr double a105 = -5.90290826836842996371446475743e-1;
inline constexpr double a106 = 2.12300514481811942347288949897e1;
inline constexpr double a107 = 1.52792336328824235832596922938e1;
inline constexpr double a108 = -3.32882109689848629194453265587e1;
inline constexpr double a109 = -2.03312017085086261358222928593e-2;
inline constexpr double a111 = -9.3714243008598732571704021658e-1;
inline constexpr double a114 = 5.18637242884406370830023853209e0;
inline constexpr double a115 = 1.09143734899672957818500254654e0;
inline constexpr double a116 = -8.14978701074692612513997267357e0;
inline constexpr double a117 = -1.85200656599969598641566180701e1;
inline constexpr double a118 = 2.27394870993505042818970056734e1;
inline constexpr double a119 = 2.49360555267965238987089396762e0;
inline constexpr double a1110 = -3.0467644718982195003823669022e0;
inline constexpr double a121 = 2.27331014751653820792359768449e0;
inline constexpr double a124 = -1.05344954667372501984066689879e1;
inline constexpr double a125 = -2.00087205822486249909675718444e0;
inline constexpr double a126 = -1.79589318631187989172765950534e1;
inline constexpr double a127 = 2.79488845294199600508499808837e1;
inline constexpr double a128 = -2.85899827713502369474065508674e0;
inline constexpr double a129 = -8.87285693353062954433549289258e0;
inline constexpr double a1210 = 1.23605671757943030647266201528e1;
inline constexpr double a1211 = 6.43392746015763530355970484046e-1;

inline constexpr double b1 = 5.42937341165687622380535766363e-2;
inline constexpr double b6 = 4.45031289275240888144113950566e0;
inline constexpr double b7 = 1.89151789931450038304281599044e0;
inline constexpr double b8 = -5.8012039600105847814672114227e0;
inline constexpr double b9 = 3.1116436695781989440891606237e-1;
inline constexpr double b10 = -1.52160949662516078556178806805e-1;
inline constexpr double b11 = 2.01365400804030348374776537501e-1;
inline constexpr double b12 = 4.47106157277725905176885569043e-2;

inline constexpr double bhh1 = 0.244094488188976377952755905512e+00;
inline constexpr double bhh2 = 0.733846688281611857341361741547e+00;
inline constexpr double bhh3 = 0.220588235294117647058823529412e-01;

inline constexpr double er1 = 0.1312004499419488073250102996e-01;
inline constexpr double er6 = -0.1225156446376204440720569753e+01;
inline constexpr double er7 = -0.4957589496572501915214079952e+00;
inline constexpr double er8 = 0.1664377182454986536961530415e+01;
inline constexpr double er9 = -0.3503288487499736816886487290e+00;
inline constexpr double er10 = 0.3341791187130174790297318841e+00;
inline constexpr double er11 = 0.8192320648511571246570742613e-01;
inline constexpr double er12 = -0.2235530786388629525884427845e-01;

// Extra stages for the 7th-order interpolant.
inline constexpr double a141 = 5.61675022830479523392909219681e-2;
inline constexpr double a147 = 2.53500210216624811088794765333e-1;
inline constexpr double a148 = -2.46239037470802489917441475441e-1;
inline constexpr double a149 = -1.24191423263816360469010140626e-1;
inline constexpr double a1410 = 1.5329179827876569731206322685e-1;
inline constexpr double a1411 = 8.20105229563468988491666602057e-3;
inline constexpr double a1412 = 7.56789766054569976138603589584e-3;
inline constexpr double a1413 = -8.298e-3;
inline constexpr double a151 = 3.18346481635021405060768473261e-2;
inline constexpr double a156 = 2.83009096723667755288322961402e-2;
inline constexpr double a157 = 5.35419883074385676223797384372e-2;
inline constexpr double a158 = -5.49237485713909884646569340306e-2;
inline constexpr double a1511 = -1.08347328697249322858509316994e-4;
inline constexpr double a1512 = 3.82571090835658412954920192323e-4;
inline constexpr double a1513 = -3.40465008687404560802977114492e-4;
inline constexpr double a1514 = 1.41312443674632500278074618366e-1;
inline constexpr double a161 = -4.28896301583791923408573538692e-1;
inline constexpr double a166 = -4.69762141536116384314449447206e0;
inline constexpr double a167 = 7.68342119606259904184240953878e0;
inline constexpr double a168 = 4.06898981839711007970213554331e0;
inline constexpr double a169 = 3.56727187455281109270669543021e-1;
inline constexpr double a1613 = -1.39902416515901462129418009734e-3;
inline constexpr double a1614 = 2.9475147891527723389556272149e0;
inline constexpr double a1615 = -9.15095847217987001081870187138e0;

inline constexpr double d41 = -0.84289382761090128651353491142e+01;
inline constexpr double d46 = 0.56671495351937776962531783590e+00;
inline constexpr double d47 = -0.30689499459498916912797304727e+01;
inline constexpr double d48 = 0.23846676565120698287728149680e+01;
inline constexpr double d49 = 0.21170345824450282767155149946e+01;
inline constexpr double d410 = -0.87139158377797299206789907490e+00;
inline constexpr double d411 = 0.22404374302607882758541771650e+01;
inline constexpr double d412 = 0.63157877876946881815570249290e+00;
inline constexpr double d413 = -0.88990336451333310820698117400e-01;
inline constexpr double d414 = 0.18148505520854727256656404962e+02;
inline constexpr double d415 = -0.91946323924783554000451984436e+01;
inline constexpr double d416 = -0.44360363875948939664310572000e+01;
inline constexpr double d51 = 0.10427508642579134603413151009e+02;
inline constexpr double d56 = 0.24228349177525818288430175319e+03;
inline constexpr double d57 = 0.16520045171727028198505394887e+03;
inline constexpr double d58 = -0.37454675472269020279518312152e+03;
inline constexpr double d59 = -0.22113666853125306036270938578e+02;
inline constexpr double d510 = 0.77334326684722638389603898808e+01;
inline constexpr double d511 = -0.30674084731089398182061213626e+02;
inline constexpr double d512 = -0.93321305264302278729567221706e+01;
inline constexpr double d513 = 0.15697238121770843886131091075e+02;
inline constexpr double d514 = -0.31139403219565177677282850411e+02;
inline constexpr double d515 = -0.93529243588444783865713862664e+01;
inline constexpr double d516 = 0.35816841486394083752465898540e+02;
inline constexpr double d61 = 0.19985053242002433820987653617e+02;
inline constexpr double d66 = -0.38703730874935176555105901742e+03;
inline constexpr double d67 = -0.18917813819516756882830838328e+03;
inline constexpr double d68 = 0.52780815920542364900561016686e+03;
inline constexpr double d69 = -0.11573902539959630126141871134e+02;
inline constexpr double d610 = 0.68812326946963000169666922661e+01;
inline constexpr double d611 = -0.10006050966910838403183860980e+01;
inline constexpr double d612 = 0.77771377980534432092869265740e+00;
inline constexpr double d613 = -0.27782057523535084065932004339e+01;
inline constexpr double d614 = -0.60196695231264120758267380846e+02;
inline constexpr double d615 = 0.84320405506677161018159903784e+02;
inline constexpr double d616 = 0.11992291136182789328035130030e+02;
inline constexpr double d71 = -0.25693933462703749003312586129e+02;
inline constexpr double d76 = -0.15418974869023643374053993627e+03;
inline constexpr double d77 = -0.23152937917604549567536039109e+03;
inline constexpr double d78 = 0.35763911791061412378285349910e+03;
inline constexpr double d79 = 0.93405324183624310003907691704e+02;
inline constexpr double d710 = -0.37458323136451633156875139351e+02;
inline constexpr double d711 = 0.10409964950896230045147246184e+03;
inline constexpr double d712 = 0.29840293426660503123344363579e+02;
inline constexpr double d713 = -0.43533456590011143754432175058e+02;
inline constexpr double d714 = 0.96324553959188282948394950600e+02;
inline constexpr double d715 = -0.39177261675615439165231486172e+02;
inline constexpr double d716 = -0.14972683625798562581422125276e+03;

inline constexpr double uround = 2.220446049250313e-16;

}  // namespace detail853

// Integrates y' = rhs(t, y) from t0 to t1. `y` holds the initial state on
// entry and the terminal state on return. Recoverable domain errors thrown
// by the rhs (constraint boundary, singularity) reject the step and shrink
// it; persistent failure surfaces as StepSizeUnderflow with the offending
// time and the last rhs diagnostic.
template <class Rhs>
IntegrationStats integrate_ivp(Rhs&& rhs, int n, double t0, double t1,
                               double* y, const IntegratorConfig& cfg,
                               DenseOutput* dense = nullptr) {
  using namespace detail853;
  if (!(t1 != t0) || !std::isfinite(t0) || !std::isfinite(t1))
    throw IntegrationError("degenerate integration span", t0);

  IntegrationStats stats;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::fabs(t1 - t0);
  std::string last_rhs_error;

  std::vector<double> buf(17 * static_cast<std::size_t>(n));
  double* k1 = buf.data();
  double* k2 = k1 + n;
  double* k3 = k2 + n;
  double* k4 = k3 + n;
  double* k5 = k4 + n;
  double* k6 = k5 + n;
  double* k7 = k6 + n;
  double* k8 = k7 + n;
  double* k9 = k8 + n;
  double* k10 = k9 + n;
  double* k11 = k10 + n;
  double* k12 = k11 + n;
  double* yw = k12 + n;
  double* ynew = yw + n;
  double* fnew = ynew + n;
  double* s15 = fnew + n;  // dense stages reuse
  double* s16 = s15 + n;

  double t = t0;

  auto call_rhs = [&](double tt, const double* yy, double* out) {
    ++stats.rhs_evals;
    rhs(tt, yy, out);
  };

  // k1 at the initial point; a failure here is not recoverable by step control.
  call_rhs(t, y, k1);

  auto scaled_err_ok = [&](const double* a) {
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(a[i])) return false;
    return true;
  };

  // Initial step size (Hairer hinit): crude bound from f0, refined with one
  // explicit Euler probe.
  double h = cfg.initial_step;
  if (h == 0.0) {
    double dnf = 0.0, dny = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sk = cfg.abs_tol + cfg.rel_tol * std::fabs(y[i]);
      dnf += (k1[i] / sk) * (k1[i] / sk);
      dny += (y[i] / sk) * (y[i] / sk);
    }
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, span);
    bool probed = false;
    try {
      for (int i = 0; i < n; ++i) yw[i] = y[i] + dir * h * k1[i];
      call_rhs(t + dir * h, yw, k2);
      probed = scaled_err_ok(k2);
    } catch (const PdgError&) {
      probed = false;
    } catch (const std::domain_error&) {
      probed = false;
    }
    if (probed) {
      double der2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double sk = cfg.abs_tol + cfg.rel_tol * std::fabs(y[i]);
        der2 += ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk);
      }
      der2 = std::sqrt(der2) / h;
      const double der12 = std::max(std::fabs(der2), std::sqrt(dnf));
      const double h1 = (der12 <= 1e-15)
                            ? std::max(1e-6, h * 1e-3)
                            : std::pow(0.01 / der12, 1.0 / 8.0);
      h = std::min({100.0 * h, h1, span});
    } else {
      h = std::min(h * 1e-3, span);
    }
  }
  h = std::fabs(h);

  constexpr double safe = 0.9;
  constexpr double fac1 = 0.333;  // min scale
  constexpr double fac2 = 6.0;    // max scale
  constexpr double expo1 = 1.0 / 8.0;

  bool rejected_last = false;
  bool finished = false;
  long nsteps = 0;

  while (!finished) {
    if (++nsteps > cfg.max_steps)
      throw MaxStepsExceeded("maximum step count exceeded", t);
    if (h < 10.0 * uround * std::max(std::fabs(t), span)) {
      std::string msg = "step size underflow";
      if (!last_rhs_error.empty()) msg += " (" + last_rhs_error + ")";
      throw StepSizeUnderflow(msg, t);
    }

    // Do not overshoot the endpoint.
    if ((t + dir * 1.01 * h - t1) * dir > 0.0) {
      h = std::fabs(t1 - t);
      finished = true;
    }
    const double hd = dir * h;

    // The 12 stages. A recoverable rhs failure rejects the step.
    bool stage_failed = false;
    try {
      for (int i = 0; i < n; ++i) yw[i] = y[i] + hd * (a21 * k1[i]);
      call_rhs(t + c2 * hd, yw, k2);
      for (int i = 0; i < n; ++i)
        yw[i] = y[i] + hd * (a31 * k1[i] + a32 * k2[i]);
      call_rhs(t + c3 * hd, yw, k3);
      for (int i = 0; i < n; ++i)
        yw[i] = y[i] + hd * (a41 * k1[i] + a43 * k3[i]);
      call_rhs(t + c4 * hd, yw, k4);
      for (int i = 0; i < n; ++i)
        yw[i] = y[i] + hd * (a51 * k1[i] + a53 * k3[i] + a54 * k4[i]);
      call_rhs(t + c5 * hd, yw, k5);
      for (int i = 0; i < n; ++i)
        yw[i] = y[i] + hd * (a61 * k1[i] + a64 * k4[i] + a65 * k5[i]);
      call_rhs(t + c6 * hd, yw, k6);
      for (int i = 0; i < n; ++i)
        yw[i] = y[i] +
                hd * (a71 * k1[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      call_rhs(t + c7 * hd, yw, k7);
      for (int i = 0; i < n; ++i)
        yw[i] = y[i] + hd * (a81 * k1[i] + a84 * k4[i] + a85 * k5[i] +
                             a86 * k6[i] + a87 * k7[i]);
      call_rhs(t + c8 * hd, yw, k8);
      for (int i = 0; i < n; ++i)
        yw[i] = y[i] + hd * (a91 * k1[i] + a94 * k4[i] + a95 * k5[i] +
                             a96 * k6[i] + a97 * k7[i] + a98 * k8[i]);
      call_rhs(t + c9 * hd, yw, k9);
      for (int i = 0; i < n; ++i)
        yw[i] = y[i] + hd * (a101 * k1[i] + a104 * k4[i] + a105 * k5[i] +
                             a106 * k6[i] + a107 * k7[i] + a108 * k8[i] +
                             a109 * k9[i]);
      call_rhs(t + c10 * hd, yw, k10);
      for (int i = 0; i < n; ++i)
        yw[i] = y[i] + hd * (a111 * k1[i] + a114 * k4[i] + a115 * k5[i] +
                             a116 * k6[i] + a117 * k7[i] + a118 * k8[i] +
                             a119 * k9[i] + a1110 * k10[i]);
      call_rhs(t + c11 * hd, yw, k11);
      for (int i = 0; i < n; ++i)
        yw[i] = y[i] + hd * (a121 * k1[i] + a124 * k4[i] + a125 * k5[i] +
                             a126 * k6[i] + a127 * k7[i] + a128 * k8[i] +
                             a129 * k9[i] + a1210 * k10[i] + a1211 * k11[i]);
      call_rhs(t + hd, yw, k12);
    } catch (const PdgError& e) {
      stage_failed = true;
      last_rhs_error = e.what();
    } catch (const std::domain_error& e) {
      stage_failed = true;
      last_rhs_error = e.what();
    }

    if (!stage_failed) {
      for (int i = 0; i < n; ++i) {
        k4[i] = b1 * k1[i] + b6 * k6[i] + b7 * k7[i] + b8 * k8[i] +
                b9 * k9[i] + b10 * k10[i] + b11 * k11[i] + b12 * k12[i];
        ynew[i] = y[i] + hd * k4[i];
      }
      if (!scaled_err_ok(ynew)) stage_failed = true;
    }

    double err = 0.0;
    if (!stage_failed) {
      double err5 = 0.0, err3 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double sk = cfg.abs_tol +
                          cfg.rel_tol * std::max(std::fabs(y[i]),
                                                 std::fabs(ynew[i]));
        double e3 = k4[i] - bhh1 * k1[i] - bhh2 * k9[i] - bhh3 * k12[i];
        double e5 = er1 * k1[i] + er6 * k6[i] + er7 * k7[i] + er8 * k8[i] +
                    er9 * k9[i] + er10 * k10[i] + er11 * k11[i] +
                    er12 * k12[i];
        err3 += (e3 / sk) * (e3 / sk);
        err5 += (e5 / sk) * (e5 / sk);
      }
      double deno = err5 + 0.01 * err3;
      if (deno <= 0.0) deno = 1.0;
      err = h * err5 * std::sqrt(1.0 / (n * deno));
      if (!std::isfinite(err)) stage_failed = true;
    }

    if (stage_failed) {
      h *= 0.25;
      rejected_last = true;
      ++stats.steps_rejected;
      finished = false;
      continue;
    }

    const double fac11 = std::pow(err, expo1);
    if (err <= 1.0) {
      // Accept.
      double fac = std::max(1.0 / fac2, std::min(1.0 / fac1, fac11 / safe));
      double hnew = h / fac;
      if (rejected_last) hnew = std::min(hnew, h);
      rejected_last = false;
      ++stats.steps_accepted;

      call_rhs(t + hd, ynew, fnew);

      if (dense) {
        DenseOutput::Step rec;
        rec.t0 = t;
        rec.h = hd;
        rec.con.resize(8 * static_cast<std::size_t>(n));
        double* con = rec.con.data();
        for (int i = 0; i < n; ++i) {
          const double ydiff = ynew[i] - y[i];
          const double bspl = hd * k1[i] - ydiff;
          con[i] = y[i];
          con[n + i] = ydiff;
          con[2 * n + i] = bspl;
          con[3 * n + i] = ydiff - hd * fnew[i] - bspl;
          con[4 * n + i] = d41 * k1[i] + d46 * k6[i] + d47 * k7[i] +
                           d48 * k8[i] + d49 * k9[i] + d410 * k10[i] +
                           d411 * k11[i] + d412 * k12[i];
          con[5 * n + i] = d51 * k1[i] + d56 * k6[i] + d57 * k7[i] +
                           d58 * k8[i] + d59 * k9[i] + d510 * k10[i] +
                           d511 * k11[i] + d512 * k12[i];
          con[6 * n + i] = d61 * k1[i] + d66 * k6[i] + d67 * k7[i] +
                           d68 * k8[i] + d69 * k9[i] + d610 * k10[i] +
                           d611 * k11[i] + d612 * k12[i];
          con[7 * n + i] = d71 * k1[i] + d76 * k6[i] + d77 * k7[i] +
                           d78 * k8[i] + d79 * k9[i] + d710 * k10[i] +
                           d711 * k11[i] + d712 * k12[i];
        }
        // Three extra stages complete the 7th-order interpolant.
        for (int i = 0; i < n; ++i)
          yw[i] = y[i] + hd * (a141 * k1[i] + a147 * k7[i] + a148 * k8[i] +
                               a149 * k9[i] + a1410 * k10[i] + a1411 * k11[i] +
                               a1412 * k12[i] + a1413 * fnew[i]);
        call_rhs(t + c14 * hd, yw, k10);  // stage 14
        for (int i = 0; i < n; ++i)
          yw[i] = y[i] + hd * (a151 * k1[i] + a156 * k6[i] + a157 * k7[i] +
                               a158 * k8[i] + a1511 * k11[i] + a1512 * k12[i] +
                               a1513 * fnew[i] + a1514 * k10[i]);
        call_rhs(t + c15 * hd, yw, s15);  // stage 15
        for (int i = 0; i < n; ++i)
          yw[i] = y[i] + hd * (a161 * k1[i] + a166 * k6[i] + a167 * k7[i] +
                               a168 * k8[i] + a169 * k9[i] + a1613 * fnew[i] +
                               a1614 * k10[i] + a1615 * s15[i]);
        call_rhs(t + c16 * hd, yw, s16);  // stage 16
        for (int i = 0; i < n; ++i) {
          con[4 * n + i] = hd * (con[4 * n + i] + d413 * fnew[i] +
                                 d414 * k10[i] + d415 * s15[i] + d416 * s16[i]);
          con[5 * n + i] = hd * (con[5 * n + i] + d513 * fnew[i] +
                                 d514 * k10[i] + d515 * s15[i] + d516 * s16[i]);
          con[6 * n + i] = hd * (con[6 * n + i] + d613 * fnew[i] +
                                 d614 * k10[i] + d615 * s15[i] + d616 * s16[i]);
          con[7 * n + i] = hd * (con[7 * n + i] + d713 * fnew[i] +
                                 d714 * k10[i] + d715 * s15[i] + d716 * s16[i]);
        }
        dense->push_step(std::move(rec));
      }

      t = finished ? t1 : t + hd;
      std::memcpy(y, ynew, sizeof(double) * static_cast<std::size_t>(n));
      std::memcpy(k1, fnew, sizeof(double) * static_cast<std::size_t>(n));
      h = std::min(hnew, span);
    } else {
      // Reject.
      h = h / std::min(1.0 / fac1, fac11 / safe);
      rejected_last = true;
      ++stats.steps_rejected;
      finished = false;
    }
  }
  return stats;
}

// Callback view of an autonomous flow f(z) with its Jacobian df/dz
// (column-major, dim x dim).
struct FlowField {
  int dim = 0;
  std::function<void(const double* z, double* dz)> rate;
  std::function<void(const double* z, double* dz, double* jac)>
      rate_and_jacobian;
};

struct SensitivityResult {
  std::vector<double> z1;    // terminal state (dim)
  std::vector<double> phi;   // STM d z(tau1)/d z(tau0), column-major dim x dim
  std::vector<double> psi;   // d z(tau1)/d tf (dim)
  IntegrationStats stats;
};

// Integrates the scaled flow dz/dtau = tf*f(z) over [tau0, tau1] together
// with Phi' = tf*A*Phi (Phi(tau0) = I) and Psi' = tf*A*Psi + f (Psi(tau0)=0),
// sharing one adaptive error control. Optional dense output covers the z
// components only.
SensitivityResult integrate_with_sensitivities(const FlowField& flow,
                                               double tf,
                                               const double* z0, double tau0,
                                               double tau1,
                                               const IntegratorConfig& cfg,
                                               DenseOutput* dense_z = nullptr);

// Plain scaled flow dz/dtau = tf*f(z) without sensitivities.
IntegrationStats integrate_flow(const FlowField& flow, double tf, double* z,
                                double tau0, double tau1,
                                const IntegratorConfig& cfg,
                                DenseOutput* dense = nullptr);

}  // namespace pdg
