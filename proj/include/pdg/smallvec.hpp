#pragma once

// Fixed-size vector/matrix helpers generic over the scalar type, so the same
// model code evaluates in doubles and in (possibly nested) duals.

#include <array>

#include "pdg/dual.hpp"

namespace pdg {

template <class S>
using Vec3 = std::array<S, 3>;
template <class S>
using Vec4 = std::array<S, 4>;
template <class S>
using Mat3 = std::array<std::array<S, 3>, 3>;  // row-major

template <class S>
Vec3<S> vec3(const S& x, const S& y, const S& z) {
  return {x, y, z};
}

template <class S, std::size_t N>
std::array<S, N> operator+(const std::array<S, N>& a,
                           const std::array<S, N>& b) {
  std::array<S, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + b[i];
  return r;
}

template <class S, std::size_t N>
std::array<S, N> operator-(const std::array<S, N>& a,
                           const std::array<S, N>& b) {
  std::array<S, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] - b[i];
  return r;
}

template <class S, std::size_t N>
std::array<S, N> operator-(const std::array<S, N>& a) {
  std::array<S, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = -a[i];
  return r;
}

template <class S, std::size_t N, class C>
std::array<S, N> operator*(const C& c, const std::array<S, N>& a) {
  std::array<S, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = c * a[i];
  return r;
}

template <class S, std::size_t N>
S dot(const std::array<S, N>& a, const std::array<S, N>& b) {
  S r = a[0] * b[0];
  for (std::size_t i = 1; i < N; ++i) r += a[i] * b[i];
  return r;
}

template <class S, std::size_t N>
S norm(const std::array<S, N>& v) {
  return sqrt(dot(v, v));
}

template <class S>
Vec3<S> cross(const Vec3<S>& a, const Vec3<S>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

template <class S>
Vec3<S> matvec(const Mat3<S>& m, const Vec3<S>& v) {
  Vec3<S> r;
  for (int i = 0; i < 3; ++i)
    r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  return r;
}

template <class S>
Mat3<S> transpose(const Mat3<S>& m) {
  Mat3<S> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = m[j][i];
  return r;
}

// Skew-symmetric matrix of v, i.e. skew(v)*w = v x w.
template <class S>
Mat3<S> skew(const Vec3<S>& v) {
  return {{{S(0.0), -v[2], v[1]}, {v[2], S(0.0), -v[0]}, {-v[1], v[0], S(0.0)}}};
}

template <class To, class From, std::size_t N>
std::array<To, N> promote(const std::array<From, N>& a) {
  std::array<To, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = To(a[i]);
  return r;
}

}  // namespace pdg
