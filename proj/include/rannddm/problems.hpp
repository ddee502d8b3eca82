#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rannddm/assembly.hpp"
#include "rannddm/basis.hpp"
#include "rannddm/geometry.hpp"
#include "rannddm/jet.hpp"
#include "rannddm/random.hpp"

namespace rannddm {

inline constexpr double kPi = 3.14159265358979323846;

/// A scalar field offering plain values and exact second-order jets.
struct ScalarField {
  std::function<double(const Point&)> value;
  ScalarFieldJet jet;
};

/// A boundary-value problem instance: operator, right-hand sides, the
/// constraining pair (L, G), and optionally the exact solution.
struct ProblemSpec {
  std::string name;
  Box domain;
  int components = 1;
  LinearOperator op;
  std::vector<std::function<double(const Point&)>> rhs;  // one per component
  ConstrainingOperator constraint;
  std::vector<ScalarField> exact;  // empty when no closed form exists
  bool has_exact = false;
};

/// Multi-scale Laplace problem on the unit square: -Delta u = f, u = 0 on the
/// boundary, exact solution (1/n) sum_i sin(w_i pi x1) sin(w_i pi x2) with
/// w_i = 2^i. The constraint L is a product of four tanh ramps of sharpness
/// rho = (1/2)^n; G = 0.
inline ProblemSpec example1(int n) {
  if (n < 1 || n > 8) throw std::invalid_argument("example1: n must be in [1,8]");
  ProblemSpec prob;
  prob.name = "example1";
  prob.domain = make_box(2, {0.0, 0.0}, {1.0, 1.0});
  prob.components = 1;
  prob.op = minus_laplacian();

  std::vector<double> omegas;
  for (int i = 1; i <= n; ++i) omegas.push_back(std::pow(2.0, i));
  const double inv_n = 1.0 / static_cast<double>(n);

  ScalarField exact;
  exact.value = [omegas, inv_n](const Point& x) {
    double s = 0.0;
    for (double w : omegas) s += std::sin(w * kPi * x[0]) * std::sin(w * kPi * x[1]);
    return inv_n * s;
  };
  exact.jet = [omegas, inv_n](const Point& x) {
    Jet2 s = Jet2::constant(2, 0.0);
    for (double w : omegas) s = s + sin_of_linear(2, 0, x[0], w * kPi) * sin_of_linear(2, 1, x[1], w * kPi);
    return inv_n * s;
  };
  prob.exact = {exact};
  prob.has_exact = true;

  prob.rhs = {[omegas, inv_n](const Point& x) {
    double s = 0.0;
    for (double w : omegas) {
      const double wp = w * kPi;
      s += 2.0 * wp * wp * std::sin(wp * x[0]) * std::sin(wp * x[1]);
    }
    return inv_n * s;
  }};

  const double rho = std::pow(0.5, n);
  prob.constraint.L = [rho](const Point& x) {
    return tanh_of_linear(2, 0, x[0], 1.0 / rho) * tanh_of_linear(2, 0, x[0], -1.0 / rho, 1.0 / rho) *
           tanh_of_linear(2, 1, x[1], 1.0 / rho) * tanh_of_linear(2, 1, x[1], -1.0 / rho, 1.0 / rho);
  };
  prob.constraint.G = {[](const Point&) { return Jet2::constant(2, 0.0); }};
  return prob;
}

/// Advection-diffusion u_t + u_x = kappa u_xx on (-1,1) x (0,1) treated as a
/// space-time problem (axis 0 = x, axis 1 = t), kappa = 0.1/pi, homogeneous
/// Dirichlet ends, initial data -sin(pi x). No closed-form solution; use
/// reference_example2 for errors.
inline ProblemSpec example2() {
  ProblemSpec prob;
  prob.name = "example2";
  prob.domain = make_box(2, {-1.0, 0.0}, {1.0, 1.0});
  prob.components = 1;
  prob.op = advection_diffusion(0.1 / kPi);
  prob.rhs = {[](const Point&) { return 0.0; }};
  prob.constraint.L = [](const Point& x) {
    return tanh_of_linear(2, 0, x[0], 1.0, 1.0) * tanh_of_linear(2, 0, x[0], -1.0, 1.0) *
           tanh_of_linear(2, 1, x[1], 1.0);
  };
  prob.constraint.G = {[](const Point& x) { return -1.0 * sin_of_linear(2, 0, x[0], kPi); }};
  return prob;
}

/// Vector reaction-diffusion problem on the unit cube: -Delta u + u = f with
/// the trigonometric exact solution; all three components share the operator
/// and L, with per-component boundary data G. f is derived from the exact
/// solution through its jets.
inline ProblemSpec example3() {
  ProblemSpec prob;
  prob.name = "example3";
  prob.domain = make_box(3, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
  prob.components = 3;
  prob.op = reaction_diffusion();

  const double w = 2.0 * kPi;
  auto component = [w](int cos_axis) {
    ScalarField f;
    f.value = [w, cos_axis](const Point& x) {
      double v = 1.0;
      for (int a = 0; a < 3; ++a)
        v *= (a == cos_axis) ? std::cos(w * x[static_cast<std::size_t>(a)])
                             : std::sin(w * x[static_cast<std::size_t>(a)]);
      return v;
    };
    f.jet = [w, cos_axis](const Point& x) {
      Jet2 v = Jet2::constant(3, 1.0);
      for (int a = 0; a < 3; ++a)
        v = v * ((a == cos_axis) ? cos_of_linear(3, a, x[static_cast<std::size_t>(a)], w)
                                 : sin_of_linear(3, a, x[static_cast<std::size_t>(a)], w));
      return v;
    };
    return f;
  };
  prob.exact = {component(0), component(1), component(2)};
  prob.has_exact = true;

  for (int c = 0; c < 3; ++c) {
    const ScalarFieldJet jet = prob.exact[static_cast<std::size_t>(c)].jet;
    const LinearOperator op = prob.op;
    prob.rhs.push_back([jet, op](const Point& x) { return op.apply(x, jet(x)); });
  }

  prob.constraint.L = [](const Point& x) {
    Jet2 v = Jet2::constant(3, 1.0);
    for (int a = 0; a < 3; ++a)
      v = v * tanh_of_linear(3, a, x[static_cast<std::size_t>(a)], 1.0) *
          tanh_of_linear(3, a, x[static_cast<std::size_t>(a)], -1.0, 1.0);
    return v;
  };
  // G_c = the exact component with its cosine factor frozen to 1, which
  // matches u_c on every face of the cube.
  auto g_field = [w](int skip_axis) {
    return ScalarFieldJet([w, skip_axis](const Point& x) {
      Jet2 v = Jet2::constant(3, 1.0);
      for (int a = 0; a < 3; ++a) {
        if (a == skip_axis) continue;
        v = v * sin_of_linear(3, a, x[static_cast<std::size_t>(a)], w);
      }
      return v;
    });
  };
  prob.constraint.G = {g_field(0), g_field(1), g_field(2)};
  return prob;
}

inline ProblemSpec make_problem(const std::string& name, int n = 2) {
  if (name == "example1") return example1(n);
  if (name == "example2") return example2();
  if (name == "example3") return example3();
  throw std::invalid_argument("unknown problem: " + name);
}

/// Checks A[u_exact] = f at randomly sampled interior points; returns the
/// largest absolute mismatch scaled by max(1, |f|).
inline double self_check(const ProblemSpec& prob, int npoints = 100, std::uint64_t seed = 7771) {
  if (!prob.has_exact) return 0.0;
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < npoints; ++i) {
    Point x{};
    for (int a = 0; a < prob.domain.dim; ++a)
      x[static_cast<std::size_t>(a)] =
          rng.next_in(prob.domain.lo[static_cast<std::size_t>(a)], prob.domain.hi[static_cast<std::size_t>(a)]);
    for (int c = 0; c < prob.components; ++c) {
      const double lhs = prob.op.apply(x, prob.exact[static_cast<std::size_t>(c)].jet(x));
      const double f = prob.rhs[static_cast<std::size_t>(c)](x);
      worst = std::max(worst, std::abs(lhs - f) / std::max(1.0, std::abs(f)));
    }
  }
  return worst;
}

/// Space-time reference field for example2 from a Crank-Nicolson scheme,
/// second order in space and time, with bilinear interpolation for off-grid
/// queries.
struct ReferenceGrid {
  int nx = 0;  // space nodes including both boundaries
  int nt = 0;  // time levels including t = 0
  std::vector<double> values;  // level-major: values[it * nx + ix]

  double at(double x, double t) const {
    const double h = 2.0 / static_cast<double>(nx - 1);
    const double dt = 1.0 / static_cast<double>(nt - 1);
    double fx = (x + 1.0) / h, ft = t / dt;
    int ix = static_cast<int>(std::floor(fx)), it = static_cast<int>(std::floor(ft));
    ix = std::min(std::max(ix, 0), nx - 2);
    it = std::min(std::max(it, 0), nt - 2);
    const double ax = fx - ix, at_ = ft - it;
    const double v00 = values[static_cast<std::size_t>(it * nx + ix)];
    const double v01 = values[static_cast<std::size_t>(it * nx + ix + 1)];
    const double v10 = values[static_cast<std::size_t>((it + 1) * nx + ix)];
    const double v11 = values[static_cast<std::size_t>((it + 1) * nx + ix + 1)];
    return (1.0 - at_) * ((1.0 - ax) * v00 + ax * v01) + at_ * ((1.0 - ax) * v10 + ax * v11);
  }
};

inline ReferenceGrid reference_example2(int resolution) {
  if (resolution < 501) throw std::invalid_argument("reference_example2: resolution must be >= 501");
  const int nx = resolution, nt = resolution;
  const double h = 2.0 / static_cast<double>(nx - 1);
  const double dt = 1.0 / static_cast<double>(nt - 1);
  const double kappa = 0.1 / kPi;
  const double a = kappa * dt / (2.0 * h * h);  // diffusion number
  const double c = dt / (4.0 * h);              // advection number

  ReferenceGrid ref;
  ref.nx = nx;
  ref.nt = nt;
  ref.values.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(nt), 0.0);
  for (int i = 0; i < nx; ++i) ref.values[static_cast<std::size_t>(i)] = -std::sin(kPi * (-1.0 + i * h));
  ref.values[0] = 0.0;
  ref.values[static_cast<std::size_t>(nx - 1)] = 0.0;

  // Interior tridiagonal system (I - dt/2 L) u+ = (I + dt/2 L) u with
  // L = kappa d_xx - d_x; constant coefficients, so the Thomas elimination
  // factors are precomputed once.
  const int ni = nx - 2;
  const double lo = -(a + c), di = 1.0 + 2.0 * a, up = -(a - c);
  std::vector<double> cp(static_cast<std::size_t>(ni));  // modified upper coefficients
  cp[0] = up / di;
  for (int i = 1; i < ni; ++i) cp[static_cast<std::size_t>(i)] = up / (di - lo * cp[static_cast<std::size_t>(i - 1)]);

  std::vector<double> rhs(static_cast<std::size_t>(ni)), dp(static_cast<std::size_t>(ni));
  for (int step = 1; step < nt; ++step) {
    const double* prev = &ref.values[static_cast<std::size_t>((step - 1) * nx)];
    double* next = &ref.values[static_cast<std::size_t>(step * nx)];
    for (int i = 0; i < ni; ++i) {
      const double um = prev[i], u0 = prev[i + 1], upN = prev[i + 2];
      rhs[static_cast<std::size_t>(i)] = (a + c) * um + (1.0 - 2.0 * a) * u0 + (a - c) * upN;
    }
    dp[0] = rhs[0] / di;
    for (int i = 1; i < ni; ++i)
      dp[static_cast<std::size_t>(i)] = (rhs[static_cast<std::size_t>(i)] - lo * dp[static_cast<std::size_t>(i - 1)]) /
                                        (di - lo * cp[static_cast<std::size_t>(i - 1)]);
    next[ni] = dp[static_cast<std::size_t>(ni - 1)];
    for (int i = ni - 2; i >= 0; --i)
      next[i + 1] = dp[static_cast<std::size_t>(i)] - cp[static_cast<std::size_t>(i)] * next[i + 2];
    next[0] = 0.0;
    next[nx - 1] = 0.0;
  }
  return ref;
}

/// Relative l2 and normalized l1 errors over a test point set; columns are
/// solution components, stacked for the aggregate numbers.
struct ErrorReport {
  double rel_l2 = 0.0;
  double normalized_l1 = 0.0;
  int test_points = 0;
  std::vector<double> component_rel_l2;
};

inline double rel_l2(const Eigen::MatrixXd& approx, const Eigen::MatrixXd& exact) {
  if (approx.rows() != exact.rows() || approx.cols() != exact.cols())
    throw std::invalid_argument("rel_l2: shape mismatch");
  const double denom = exact.norm();
  if (denom == 0.0) throw std::domain_error("rel_l2: exact solution has zero norm");
  return (approx - exact).norm() / denom;
}

inline double normalized_l1(const Eigen::MatrixXd& approx, const Eigen::MatrixXd& exact) {
  if (approx.rows() != exact.rows() || approx.cols() != exact.cols())
    throw std::invalid_argument("normalized_l1: shape mismatch");
  const double mean = exact.mean();
  const double var = (exact.array() - mean).square().mean();  // population convention
  const double gamma = std::sqrt(var);
  if (gamma == 0.0) throw std::domain_error("normalized_l1: exact solution set has zero standard deviation");
  const double m = static_cast<double>(exact.rows());
  return (approx - exact).cwiseAbs().sum() / (m * gamma);
}

inline ErrorReport compute_errors(const Eigen::MatrixXd& approx, const Eigen::MatrixXd& exact) {
  ErrorReport rep;
  rep.test_points = static_cast<int>(exact.rows());
  rep.rel_l2 = rel_l2(approx, exact);
  rep.normalized_l1 = normalized_l1(approx, exact);
  for (Eigen::Index c = 0; c < exact.cols(); ++c)
    rep.component_rel_l2.push_back(rel_l2(approx.col(c), exact.col(c)));
  return rep;
}

}  // namespace rannddm
