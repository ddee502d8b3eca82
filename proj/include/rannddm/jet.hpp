#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "rannddm/geometry.hpp"

namespace rannddm {

/// Length of a packed second-order jet in dimension d: value, gradient,
/// upper triangle of the Hessian.
inline constexpr int jet_len(int d) { return 1 + d + d * (d + 1) / 2; }

/// Packed index of Hessian entry (i,j), i <= j, row-major upper triangle.
inline constexpr int hess_index(int i, int j, int d) { return i * d - i * (i - 1) / 2 + (j - i); }

/// Value, first and second derivative of a univariate function at one point.
struct ScalarTriple {
  double f = 0.0;
  double df = 0.0;
  double d2f = 0.0;
};

inline ScalarTriple triple_identity(double s) { return {s, 1.0, 0.0}; }

inline ScalarTriple triple_tanh(double s) {
  const double t = std::tanh(s);
  const double sech2 = 1.0 - t * t;
  return {t, sech2, -2.0 * t * sech2};
}

inline ScalarTriple triple_sin(double s) { return {std::sin(s), std::cos(s), -std::sin(s)}; }

inline ScalarTriple triple_cos(double s) { return {std::cos(s), -std::sin(s), -std::cos(s)}; }

/// 1/s with derivatives; caller guarantees s != 0.
inline ScalarTriple triple_recip(double s) {
  const double r = 1.0 / s;
  return {r, -r * r, 2.0 * r * r * r};
}

/// Second-order forward-mode bundle: value, gradient, and symmetric Hessian
/// (upper triangle stored) of a scalar field at a point.
struct Jet2 {
  int dim = 0;
  double v = 0.0;
  std::array<double, kMaxDim> g{};
  std::array<double, kMaxDim*(kMaxDim + 1) / 2> h{};

  double hess(int i, int j) const {
    if (i > j) std::swap(i, j);
    return h[static_cast<std::size_t>(hess_index(i, j, dim))];
  }
  double& hess_ref(int i, int j) {
    if (i > j) std::swap(i, j);
    return h[static_cast<std::size_t>(hess_index(i, j, dim))];
  }

  static Jet2 constant(int dim, double value) {
    Jet2 out;
    out.dim = dim;
    out.v = value;
    return out;
  }

  /// Seeds coordinate `axis` with value `value` and d(x_hat)/dx = scale,
  /// the chain-rule factor of an affine input normalization.
  static Jet2 variable(int dim, int axis, double value, double scale = 1.0) {
    if (axis < 0 || axis >= dim) throw std::invalid_argument("jet variable axis out of range");
    Jet2 out;
    out.dim = dim;
    out.v = value;
    out.g[static_cast<std::size_t>(axis)] = scale;
    return out;
  }
};

namespace detail {
inline void require_same_dim(const Jet2& a, const Jet2& b) {
  if (a.dim != b.dim) throw std::invalid_argument("jet dimension mismatch");
}
}  // namespace detail

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  detail::require_same_dim(a, b);
  Jet2 out = a;
  out.v += b.v;
  const int nh = a.dim * (a.dim + 1) / 2;
  for (int i = 0; i < a.dim; ++i) out.g[static_cast<std::size_t>(i)] += b.g[static_cast<std::size_t>(i)];
  for (int i = 0; i < nh; ++i) out.h[static_cast<std::size_t>(i)] += b.h[static_cast<std::size_t>(i)];
  return out;
}

inline Jet2 operator*(double c, const Jet2& a) {
  Jet2 out = a;
  out.v *= c;
  const int nh = a.dim * (a.dim + 1) / 2;
  for (int i = 0; i < a.dim; ++i) out.g[static_cast<std::size_t>(i)] *= c;
  for (int i = 0; i < nh; ++i) out.h[static_cast<std::size_t>(i)] *= c;
  return out;
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) { return a + (-1.0 * b); }

/// Leibniz product: d2(ab) = a d2b + b d2a + da dbT + db daT.
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  detail::require_same_dim(a, b);
  Jet2 out;
  out.dim = a.dim;
  out.v = a.v * b.v;
  for (int i = 0; i < a.dim; ++i) {
    const auto si = static_cast<std::size_t>(i);
    out.g[si] = a.v * b.g[si] + b.v * a.g[si];
  }
  for (int i = 0; i < a.dim; ++i)
    for (int j = i; j < a.dim; ++j) {
      const auto k = static_cast<std::size_t>(hess_index(i, j, a.dim));
      // Grouped so the expression is symmetric in (a, b) to the last bit.
      out.h[k] = (a.v * b.h[k] + b.v * a.h[k]) + (a.g[static_cast<std::size_t>(i)] * b.g[static_cast<std::size_t>(j)] +
                                                  a.g[static_cast<std::size_t>(j)] * b.g[static_cast<std::size_t>(i)]);
    }
  return out;
}

/// Chain rule through a univariate function; `t` must be evaluated at a.v.
inline Jet2 compose(const ScalarTriple& t, const Jet2& a) {
  Jet2 out;
  out.dim = a.dim;
  out.v = t.f;
  for (int i = 0; i < a.dim; ++i) out.g[static_cast<std::size_t>(i)] = t.df * a.g[static_cast<std::size_t>(i)];
  for (int i = 0; i < a.dim; ++i)
    for (int j = i; j < a.dim; ++j) {
      const auto k = static_cast<std::size_t>(hess_index(i, j, a.dim));
      out.h[k] = t.df * a.h[k] + t.d2f * a.g[static_cast<std::size_t>(i)] * a.g[static_cast<std::size_t>(j)];
    }
  return out;
}

/// tanh(alpha x_axis + beta) as a jet in dimension dim.
inline Jet2 tanh_of_linear(int dim, int axis, double x, double alpha, double beta = 0.0) {
  const Jet2 arg = Jet2::variable(dim, axis, alpha * x + beta, alpha);
  return compose(triple_tanh(arg.v), arg);
}

/// sin(alpha x_axis + beta) as a jet in dimension dim.
inline Jet2 sin_of_linear(int dim, int axis, double x, double alpha, double beta = 0.0) {
  const Jet2 arg = Jet2::variable(dim, axis, alpha * x + beta, alpha);
  return compose(triple_sin(arg.v), arg);
}

/// cos(alpha x_axis + beta) as a jet in dimension dim.
inline Jet2 cos_of_linear(int dim, int axis, double x, double alpha, double beta = 0.0) {
  const Jet2 arg = Jet2::variable(dim, axis, alpha * x + beta, alpha);
  return compose(triple_cos(arg.v), arg);
}

}  // namespace rannddm
