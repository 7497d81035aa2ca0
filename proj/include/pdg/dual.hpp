#pragma once

// Forward-mode automatic differentiation on a fixed seed width.
//
// Dual<T, N> carries a value and N directional derivatives. T may itself be
// a Dual, which yields exact second derivatives (used for the Jacobian of
// the costate equations, which are themselves gradients).

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <type_traits>

namespace pdg {

template <class T, int N>
struct Dual {
  static_assert(N > 0);
  using value_type = T;
  static constexpr int seed_dim = N;

  T val{};
  std::array<T, N> der{};

  constexpr Dual() = default;
  constexpr Dual(double v) : val(v) {}  // NOLINT: constants promote implicitly

  template <class U = T>
    requires(!std::is_same_v<U, double>)
  constexpr Dual(const T& v) : val(v) {}  // NOLINT

  // Independent variable: value v with unit derivative in direction i.
  static Dual variable(const T& v, int i) {
    Dual d;
    d.val = v;
    d.der[static_cast<std::size_t>(i)] = T(1.0);
    return d;
  }

  Dual& operator+=(const Dual& o) {
    val += o.val;
    for (int i = 0; i < N; ++i) der[i] += o.der[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    val -= o.val;
    for (int i = 0; i < N; ++i) der[i] -= o.der[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r;
    r.val = a.val + b.val;
    for (int i = 0; i < N; ++i) r.der[i] = a.der[i] + b.der[i];
    return r;
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r;
    r.val = a.val - b.val;
    for (int i = 0; i < N; ++i) r.der[i] = a.der[i] - b.der[i];
    return r;
  }
  friend Dual operator-(const Dual& a) {
    Dual r;
    r.val = -a.val;
    for (int i = 0; i < N; ++i) r.der[i] = -a.der[i];
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.val = a.val * b.val;
    for (int i = 0; i < N; ++i) r.der[i] = a.der[i] * b.val + a.val * b.der[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r;
    const T inv = T(1.0) / b.val;
    r.val = a.val * inv;
    for (int i = 0; i < N; ++i) r.der[i] = (a.der[i] - r.val * b.der[i]) * inv;
    return r;
  }

  friend Dual operator+(const Dual& a, double b) {
    Dual r = a;
    r.val += b;
    return r;
  }
  friend Dual operator+(double a, const Dual& b) { return b + a; }
  friend Dual operator-(const Dual& a, double b) {
    Dual r = a;
    r.val -= b;
    return r;
  }
  friend Dual operator-(double a, const Dual& b) { return -(b - a); }
  friend Dual operator*(const Dual& a, double b) {
    Dual r;
    r.val = a.val * b;
    for (int i = 0; i < N; ++i) r.der[i] = a.der[i] * b;
    return r;
  }
  friend Dual operator*(double a, const Dual& b) { return b * a; }
  friend Dual operator/(const Dual& a, double b) { return a * (1.0 / b); }
  friend Dual operator/(double a, const Dual& b) {
    Dual r;
    const T inv = T(1.0) / b.val;
    r.val = a * inv;
    for (int i = 0; i < N; ++i) r.der[i] = -r.val * inv * b.der[i];
    return r;
  }
};

inline double value_of(double x) { return x; }
template <class T, int N>
double value_of(const Dual<T, N>& x) {
  return value_of(x.val);
}

// Comparisons act on the underlying value; derivative information does not
// participate in branch decisions.
template <class T, int N>
bool operator<(const Dual<T, N>& a, const Dual<T, N>& b) {
  return value_of(a) < value_of(b);
}
template <class T, int N>
bool operator<(const Dual<T, N>& a, double b) {
  return value_of(a) < b;
}
template <class T, int N>
bool operator<(double a, const Dual<T, N>& b) {
  return a < value_of(b);
}
template <class T, int N>
bool operator>(const Dual<T, N>& a, const Dual<T, N>& b) {
  return value_of(a) > value_of(b);
}
template <class T, int N>
bool operator>(const Dual<T, N>& a, double b) {
  return value_of(a) > b;
}
template <class T, int N>
bool operator>(double a, const Dual<T, N>& b) {
  return a > value_of(b);
}
template <class T, int N>
bool operator<=(const Dual<T, N>& a, double b) {
  return value_of(a) <= b;
}
template <class T, int N>
bool operator>=(const Dual<T, N>& a, double b) {
  return value_of(a) >= b;
}

namespace detail {
template <class T>
T chain_guarded_acos_arg(const T& v) {
  if (value_of(v) > 1.0 || value_of(v) < -1.0)
    throw std::domain_error("acos/asin argument outside [-1, 1]");
  return v;
}
}  // namespace detail

using std::acos;
using std::asin;
using std::atan;
using std::atan2;
using std::cos;
using std::exp;
using std::fabs;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tan;

template <class T, int N>
Dual<T, N> sqrt(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = sqrt(x.val);
  const T half_inv = T(0.5) / r.val;
  for (int i = 0; i < N; ++i) r.der[i] = half_inv * x.der[i];
  return r;
}

template <class T, int N>
Dual<T, N> exp(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = exp(x.val);
  for (int i = 0; i < N; ++i) r.der[i] = r.val * x.der[i];
  return r;
}

template <class T, int N>
Dual<T, N> log(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = log(x.val);
  const T inv = T(1.0) / x.val;
  for (int i = 0; i < N; ++i) r.der[i] = inv * x.der[i];
  return r;
}

template <class T, int N>
Dual<T, N> sin(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = sin(x.val);
  const T c = cos(x.val);
  for (int i = 0; i < N; ++i) r.der[i] = c * x.der[i];
  return r;
}

template <class T, int N>
Dual<T, N> cos(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = cos(x.val);
  const T ms = -sin(x.val);
  for (int i = 0; i < N; ++i) r.der[i] = ms * x.der[i];
  return r;
}

template <class T, int N>
Dual<T, N> tan(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = tan(x.val);
  const T g = T(1.0) + r.val * r.val;
  for (int i = 0; i < N; ++i) r.der[i] = g * x.der[i];
  return r;
}

// sec(x) = 1/cos(x); the derivative sec(x)tan(x) is exact. No clamping: the
// blow-up near odd multiples of pi/2 is the secant penalty's working regime.
inline double sec(double x) { return 1.0 / std::cos(x); }
template <class T, int N>
Dual<T, N> sec(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = T(1.0) / cos(x.val);
  const T g = r.val * tan(x.val);
  for (int i = 0; i < N; ++i) r.der[i] = g * x.der[i];
  return r;
}

template <class T, int N>
Dual<T, N> asin(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = asin(detail::chain_guarded_acos_arg(x.val));
  const T g = T(1.0) / sqrt(T(1.0) - x.val * x.val);
  for (int i = 0; i < N; ++i) r.der[i] = g * x.der[i];
  return r;
}

template <class T, int N>
Dual<T, N> acos(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = acos(detail::chain_guarded_acos_arg(x.val));
  const T g = T(-1.0) / sqrt(T(1.0) - x.val * x.val);
  for (int i = 0; i < N; ++i) r.der[i] = g * x.der[i];
  return r;
}

template <class T, int N>
Dual<T, N> atan(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = atan(x.val);
  const T g = T(1.0) / (T(1.0) + x.val * x.val);
  for (int i = 0; i < N; ++i) r.der[i] = g * x.der[i];
  return r;
}

template <class T, int N>
Dual<T, N> atan2(const Dual<T, N>& y, const Dual<T, N>& x) {
  Dual<T, N> r;
  r.val = atan2(y.val, x.val);
  const T inv_n2 = T(1.0) / (x.val * x.val + y.val * y.val);
  for (int i = 0; i < N; ++i)
    r.der[i] = (x.val * y.der[i] - y.val * x.der[i]) * inv_n2;
  return r;
}

template <class T, int N>
Dual<T, N> pow(const Dual<T, N>& x, double e) {
  Dual<T, N> r;
  r.val = pow(x.val, e);
  const T g = T(e) * pow(x.val, e - 1.0);
  for (int i = 0; i < N; ++i) r.der[i] = g * x.der[i];
  return r;
}

template <class T, int N>
Dual<T, N> fabs(const Dual<T, N>& x) {
  return value_of(x) < 0.0 ? -x : x;
}

// --- gradient / jacobian drivers -------------------------------------------

// gradient<N>(f, x): exact df/dx for f composed of the primitives above.
// f receives std::array<Dual<double,N>, N> and returns Dual<double,N>.
template <int N, class F>
std::array<double, N> gradient(F&& f, const std::array<double, N>& x) {
  using D = Dual<double, N>;
  std::array<D, N> xs;
  for (int i = 0; i < N; ++i) xs[i] = D::variable(x[i], i);
  const D y = f(xs);
  return y.der;
}

// jacobian<M,N>(g, x): row i is the gradient of output component i.
template <int M, int N, class F>
std::array<std::array<double, N>, M> jacobian(F&& g,
                                              const std::array<double, N>& x) {
  using D = Dual<double, N>;
  std::array<D, N> xs;
  for (int i = 0; i < N; ++i) xs[i] = D::variable(x[i], i);
  const std::array<D, M> ys = g(xs);
  std::array<std::array<double, N>, M> J;
  for (int r = 0; r < M; ++r) J[r] = ys[r].der;
  return J;
}

}  // namespace pdg
