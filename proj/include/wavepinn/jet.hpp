#pragma once

// Truncated second-order jets: value, gradient, and upper-triangle Hessian
// with respect to up to three input directions, propagated by Taylor
// arithmetic. The component type T is either plain double (closed-form
// oracles, prediction) or a tape Scalar (training), so parameter gradients of
// any jet component are obtainable by a reverse sweep of the shared tape.

#include <array>
#include <cmath>
#include <concepts>
#include <span>
#include <stdexcept>
#include <utility>

#include "wavepinn/tape.hpp"

namespace wavepinn {

// Double counterparts so generic jet code can spell powi/ln uniformly for
// both component algebras.
inline double powi(double x, int n) { return powi_value(x, n); }
inline double ln(double x) { return std::log(x); }

namespace detail {

inline double constant_like(const double&, double v) { return v; }
inline Scalar constant_like(const Scalar& like, double v) {
  return like.tape()->constant(v);
}

}  // namespace detail

template <typename T>
struct Jet2 {
  int dim = 1;
  T val{};
  std::array<T, 3> grad{};
  std::array<T, 6> hess{};  // upper triangle, row-major

  static int hess_count(int dim) { return dim * (dim + 1) / 2; }

  // hess(i,j) and hess(j,i) map to the same storage slot.
  int hess_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return i * dim - i * (i - 1) / 2 + (j - i);
  }

  const T& d(int i) const { return grad[static_cast<std::size_t>(i)]; }
  const T& d2(int i, int j) const {
    return hess[static_cast<std::size_t>(hess_index(i, j))];
  }
};

namespace detail {

inline void check_dims(int a, int b) {
  if (a != b) throw std::invalid_argument("jet dimension mismatch");
}

// u = h(f): u_i = h1 * f_i, u_ij = h2 * f_i * f_j + h1 * f_ij.
template <typename T>
Jet2<T> jet_unary(const Jet2<T>& x, T h, T h1, T h2) {
  Jet2<T> r;
  r.dim = x.dim;
  r.val = std::move(h);
  for (int i = 0; i < x.dim; ++i) r.grad[i] = h1 * x.grad[i];
  int k = 0;
  for (int i = 0; i < x.dim; ++i)
    for (int j = i; j < x.dim; ++j, ++k)
      r.hess[k] = h2 * x.grad[i] * x.grad[j] + h1 * x.hess[k];
  return r;
}

}  // namespace detail

// Constant jet: value with zero derivatives. `like` supplies the tape when T
// is a Scalar.
template <typename T>
Jet2<T> jet_constant(const T& like, double value, int dim) {
  Jet2<T> r;
  r.dim = dim;
  r.val = detail::constant_like(like, value);
  for (int i = 0; i < dim; ++i) r.grad[i] = detail::constant_like(like, 0.0);
  for (int k = 0; k < Jet2<T>::hess_count(dim); ++k)
    r.hess[k] = detail::constant_like(like, 0.0);
  return r;
}

template <typename T>
Jet2<T> jet_from_value(const T& value, int dim) {
  Jet2<T> r = jet_constant(value, 0.0, dim);
  r.val = value;
  return r;
}

// Seeds an independent variable: grad = unit vector along direction, hess = 0.
template <typename T>
Jet2<T> jet_seed(const T& value, int direction, int dim) {
  if (direction < 0 || direction >= dim)
    throw std::out_of_range("jet seed direction out of range");
  Jet2<T> r = jet_from_value(value, dim);
  r.grad[direction] = detail::constant_like(value, 1.0);
  return r;
}

inline Jet2<Scalar> jet_input(Tape& tape, double value, int direction,
                              int dim) {
  return jet_seed(tape.constant(value), direction, dim);
}

template <typename T>
Jet2<T> operator+(const Jet2<T>& a, const Jet2<T>& b) {
  detail::check_dims(a.dim, b.dim);
  Jet2<T> r;
  r.dim = a.dim;
  r.val = a.val + b.val;
  for (int i = 0; i < a.dim; ++i) r.grad[i] = a.grad[i] + b.grad[i];
  for (int k = 0; k < Jet2<T>::hess_count(a.dim); ++k)
    r.hess[k] = a.hess[k] + b.hess[k];
  return r;
}

template <typename T>
Jet2<T> operator-(const Jet2<T>& a, const Jet2<T>& b) {
  detail::check_dims(a.dim, b.dim);
  Jet2<T> r;
  r.dim = a.dim;
  r.val = a.val - b.val;
  for (int i = 0; i < a.dim; ++i) r.grad[i] = a.grad[i] - b.grad[i];
  for (int k = 0; k < Jet2<T>::hess_count(a.dim); ++k)
    r.hess[k] = a.hess[k] - b.hess[k];
  return r;
}

template <typename T>
Jet2<T> operator-(const Jet2<T>& x) {
  Jet2<T> r;
  r.dim = x.dim;
  r.val = -x.val;
  for (int i = 0; i < x.dim; ++i) r.grad[i] = -x.grad[i];
  for (int k = 0; k < Jet2<T>::hess_count(x.dim); ++k) r.hess[k] = -x.hess[k];
  return r;
}

// Product rule: (fg)_ij = f_ij g + f_i g_j + f_j g_i + f g_ij.
template <typename T>
Jet2<T> operator*(const Jet2<T>& a, const Jet2<T>& b) {
  detail::check_dims(a.dim, b.dim);
  Jet2<T> r;
  r.dim = a.dim;
  r.val = a.val * b.val;
  for (int i = 0; i < a.dim; ++i)
    r.grad[i] = a.grad[i] * b.val + a.val * b.grad[i];
  int k = 0;
  for (int i = 0; i < a.dim; ++i)
    for (int j = i; j < a.dim; ++j, ++k)
      r.hess[k] = a.hess[k] * b.val + a.grad[i] * b.grad[j] +
                  a.grad[j] * b.grad[i] + a.val * b.hess[k];
  return r;
}

template <typename T>
Jet2<T> operator/(const Jet2<T>& a, const Jet2<T>& b) {
  detail::check_dims(a.dim, b.dim);
  T inv = detail::constant_like(b.val, 1.0) / b.val;
  T inv2 = inv * inv;
  return a * detail::jet_unary(b, inv, -inv2, 2.0 * (inv2 * inv));
}

// Scaling by a plain scalar or a T coefficient (zero derivatives).
template <typename T>
Jet2<T> scale(const Jet2<T>& x, const T& c) {
  Jet2<T> r;
  r.dim = x.dim;
  r.val = x.val * c;
  for (int i = 0; i < x.dim; ++i) r.grad[i] = x.grad[i] * c;
  for (int k = 0; k < Jet2<T>::hess_count(x.dim); ++k)
    r.hess[k] = x.hess[k] * c;
  return r;
}

template <typename T>
  requires(!std::same_as<T, double>)
Jet2<T> scale(const Jet2<T>& x, double c) {
  return scale(x, detail::constant_like(x.val, c));
}

template <typename T>
Jet2<T> operator+(const Jet2<T>& x, double c) {
  Jet2<T> r = x;
  r.val = x.val + c;
  return r;
}

template <typename T>
Jet2<T> operator-(const Jet2<T>& x, double c) {
  return x + (-c);
}

template <typename T>
Jet2<T> operator-(double c, const Jet2<T>& x) {
  return (-x) + c;
}

template <typename T>
Jet2<T> square(const Jet2<T>& x) {
  T h = x.val * x.val;
  return detail::jet_unary(x, h, 2.0 * x.val,
                           detail::constant_like(x.val, 2.0));
}

template <typename T>
Jet2<T> exp(const Jet2<T>& x) {
  using std::exp;
  T h = exp(x.val);
  return detail::jet_unary(x, h, h, h);
}

template <typename T>
Jet2<T> sin(const Jet2<T>& x) {
  using std::cos;
  using std::sin;
  T s = sin(x.val);
  T c = cos(x.val);
  return detail::jet_unary(x, s, c, -s);
}

template <typename T>
Jet2<T> cos(const Jet2<T>& x) {
  using std::cos;
  using std::sin;
  T c = cos(x.val);
  T s = sin(x.val);
  return detail::jet_unary(x, c, -s, -c);
}

template <typename T>
Jet2<T> ln(const Jet2<T>& x) {
  T h = ln(x.val);
  T inv = detail::constant_like(x.val, 1.0) / x.val;
  return detail::jet_unary(x, std::move(h), inv, -(inv * inv));
}

template <typename T>
Jet2<T> tanh(const Jet2<T>& x) {
  using std::tanh;
  T t = tanh(x.val);
  T h1 = 1.0 - t * t;
  return detail::jet_unary(x, t, h1, -2.0 * (t * h1));
}

template <typename T>
Jet2<T> powi(const Jet2<T>& x, int n) {
  if (n == 0) return jet_constant(x.val, 1.0, x.dim);
  if (n == 1) return x;
  T h = powi(x.val, n);
  T h1 = static_cast<double>(n) * powi(x.val, n - 1);
  T h2 = static_cast<double>(n) * static_cast<double>(n - 1) *
         powi(x.val, n - 2);
  return detail::jet_unary(x, h, h1, h2);
}

// sum_k w_k x_k + bias, with plain-coefficient weights. The Scalar overload in
// tape-land fuses each component into one AffineDot node so the tape stays
// compact for wide layers.
template <typename T>
Jet2<T> affine_combination(std::span<const T> weights,
                           std::span<const Jet2<T>> xs, const T& bias) {
  if (weights.size() != xs.size() || xs.empty())
    throw std::invalid_argument("affine_combination: size mismatch");
  const int dim = xs[0].dim;
  Jet2<T> r = jet_constant(xs[0].val, 0.0, dim);
  r.val = bias;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    detail::check_dims(dim, xs[k].dim);
    r.val = r.val + weights[k] * xs[k].val;
    for (int i = 0; i < dim; ++i)
      r.grad[i] = r.grad[i] + weights[k] * xs[k].grad[i];
    for (int h = 0; h < Jet2<T>::hess_count(dim); ++h)
      r.hess[h] = r.hess[h] + weights[k] * xs[k].hess[h];
  }
  return r;
}

Jet2<Scalar> affine_combination(std::span<const Scalar> weights,
                                std::span<const Jet2<Scalar>> xs,
                                const Scalar& bias);

}  // namespace wavepinn
