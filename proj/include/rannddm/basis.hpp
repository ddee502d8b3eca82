#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rannddm/geometry.hpp"
#include "rannddm/jet.hpp"
#include "rannddm/random.hpp"

namespace rannddm {

enum class Activation { Tanh, Sin };

inline ScalarTriple activation_triple(Activation act, double s) {
  return act == Activation::Tanh ? triple_tanh(s) : triple_sin(s);
}

/// Single-hidden-layer random network: hidden weights R (m x d) and biases b
/// drawn uniformly from [-1,1] and frozen. Only the output weights are ever
/// solved for. Inputs are normalized to [-1,1]^d per subdomain box before the
/// hidden layer is applied.
struct RandomBasis {
  Eigen::MatrixXd R;  // m x d
  Eigen::VectorXd b;  // m
  Activation act = Activation::Tanh;
  int m = 0;
  int dim = 0;
  std::uint64_t seed = 0;
};

inline RandomBasis make_random_basis(std::uint64_t seed, int m, int dim, Activation act) {
  if (m < 1) throw std::invalid_argument("hidden width m must be >= 1");
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("basis dimension must be in [1,4]");
  RandomBasis basis;
  basis.m = m;
  basis.dim = dim;
  basis.act = act;
  basis.seed = seed;
  basis.R.resize(m, dim);
  basis.b.resize(m);
  SplitMix64 rng(seed);
  for (int k = 0; k < m; ++k)
    for (int a = 0; a < dim; ++a) basis.R(k, a) = rng.next_symmetric();
  for (int k = 0; k < m; ++k) basis.b(k) = rng.next_symmetric();
  return basis;
}

/// Batch of m jets stored as an m x jet_len(d) matrix; row k packs
/// [value, gradient, upper-triangular Hessian] of the k-th function.
using JetBatch = Eigen::MatrixXd;

inline Jet2 jet_from_row(const JetBatch& batch, int row, int dim) {
  Jet2 out;
  out.dim = dim;
  out.v = batch(row, 0);
  for (int a = 0; a < dim; ++a) out.g[static_cast<std::size_t>(a)] = batch(row, 1 + a);
  const int nh = dim * (dim + 1) / 2;
  for (int k = 0; k < nh; ++k) out.h[static_cast<std::size_t>(k)] = batch(row, 1 + dim + k);
  return out;
}

inline void row_from_jet(JetBatch& batch, int row, const Jet2& jet) {
  batch(row, 0) = jet.v;
  for (int a = 0; a < jet.dim; ++a) batch(row, 1 + a) = jet.g[static_cast<std::size_t>(a)];
  const int nh = jet.dim * (jet.dim + 1) / 2;
  for (int k = 0; k < nh; ++k) batch(row, 1 + jet.dim + k) = jet.h[static_cast<std::size_t>(k)];
}

/// Jets of all m neuron outputs phi_k(x) = act(R_k . x_hat + b_k), with
/// derivatives in original coordinates (normalization folded in by chain
/// rule). Evaluable anywhere; support restriction is the window's job.
inline void phi_jets(const RandomBasis& basis, const Box& box, const Point& x, JetBatch& out) {
  const int d = basis.dim;
  const Point xh = normalize_to_box(box, x);
  const Point sc = normalize_scales(box);
  out.resize(basis.m, jet_len(d));
  for (int k = 0; k < basis.m; ++k) {
    double z = basis.b(k);
    for (int a = 0; a < d; ++a) z += basis.R(k, a) * xh[static_cast<std::size_t>(a)];
    const ScalarTriple t = activation_triple(basis.act, z);
    out(k, 0) = t.f;
    // z is affine in x, so grad = df * R_k .* sc and hess = d2f * (R.*sc)(R.*sc)^T.
    std::array<double, kMaxDim> gz{};
    for (int a = 0; a < d; ++a) gz[static_cast<std::size_t>(a)] = basis.R(k, a) * sc[static_cast<std::size_t>(a)];
    for (int a = 0; a < d; ++a) out(k, 1 + a) = t.df * gz[static_cast<std::size_t>(a)];
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        out(k, 1 + d + hess_index(i, j, d)) =
            t.d2f * gz[static_cast<std::size_t>(i)] * gz[static_cast<std::size_t>(j)];
  }
}

/// Values-only variant of phi_jets.
inline void phi_values(const RandomBasis& basis, const Box& box, const Point& x, Eigen::VectorXd& out) {
  const int d = basis.dim;
  const Point xh = normalize_to_box(box, x);
  out.resize(basis.m);
  for (int k = 0; k < basis.m; ++k) {
    double z = basis.b(k);
    for (int a = 0; a < d; ++a) z += basis.R(k, a) * xh[static_cast<std::size_t>(a)];
    out(k) = basis.act == Activation::Tanh ? std::tanh(z) : std::sin(z);
  }
}

/// The window family over a decomposition: squared-cosine bumps
/// w_hat_j = prod_i [1 + cos(pi (x_i - mu_i) / sigma_i)]^2 normalized to a
/// partition of unity, omega_j = w_hat_j / sum_k w_hat_k. The sum runs over
/// the neighbor set only; any window positive at x belongs to it.
struct WindowSet {
  const CartesianDecomposition* dec = nullptr;
};

inline WindowSet make_window_set(const CartesianDecomposition& dec) { return WindowSet{&dec}; }

namespace detail {

/// Unnormalized bump jet for subdomain j; zero jet outside the box. Axes
/// with a single subdomain contribute a constant factor 1.
inline Jet2 raw_window_jet(const CartesianDecomposition& dec, int j, const Point& x) {
  const int d = dec.dim();
  const auto sj = static_cast<std::size_t>(j);
  if (!contains(dec.subdomains[sj], x)) return Jet2::constant(d, 0.0);
  Jet2 prod = Jet2::constant(d, 1.0);
  for (int a = 0; a < d; ++a) {
    const auto ia = static_cast<std::size_t>(a);
    if (dec.per_axis_counts[ia] == 1) continue;
    const double mu = dec.centers[sj][ia];
    const double sigma = dec.half_widths[sj][ia];
    // s = (x_a - mu)/sigma in [-1,1]; factor = (1 + cos(pi s))^2.
    const Jet2 s = Jet2::variable(d, a, (x[ia] - mu) / sigma, 1.0 / sigma);
    const double pi = 3.14159265358979323846;
    const Jet2 base = Jet2::constant(d, 1.0) + compose(triple_cos(pi * s.v), pi * s);
    prod = prod * (base * base);
  }
  return prod;
}

inline double raw_window_value(const CartesianDecomposition& dec, int j, const Point& x) {
  const int d = dec.dim();
  const auto sj = static_cast<std::size_t>(j);
  if (!contains(dec.subdomains[sj], x)) return 0.0;
  double prod = 1.0;
  for (int a = 0; a < d; ++a) {
    const auto ia = static_cast<std::size_t>(a);
    if (dec.per_axis_counts[ia] == 1) continue;
    const double s = (x[ia] - dec.centers[sj][ia]) / dec.half_widths[sj][ia];
    const double base = 1.0 + std::cos(3.14159265358979323846 * s);
    prod *= base * base;
  }
  return prod;
}

}  // namespace detail

/// Jet of the normalized window omega_j at an in-domain point.
inline Jet2 window_jet(const WindowSet& ws, int j, const Point& x) {
  const CartesianDecomposition& dec = *ws.dec;
  const int d = dec.dim();
  if (!contains(dec.subdomains[static_cast<std::size_t>(j)], x)) return Jet2::constant(d, 0.0);
  const Jet2 wj = detail::raw_window_jet(dec, j, x);
  Jet2 total = Jet2::constant(d, 0.0);
  for (int k : dec.neighbor_sets[static_cast<std::size_t>(j)]) total = total + detail::raw_window_jet(dec, k, x);
  if (total.v <= 0.0) throw std::domain_error("window normalization vanished; point outside the domain?");
  return wj * compose(triple_recip(total.v), total);
}

inline double window_value(const WindowSet& ws, int j, const Point& x) {
  const CartesianDecomposition& dec = *ws.dec;
  const double wj = detail::raw_window_value(dec, j, x);
  if (wj == 0.0) return 0.0;
  double total = 0.0;
  for (int k : dec.neighbor_sets[static_cast<std::size_t>(j)]) total += detail::raw_window_value(dec, k, x);
  return wj / total;
}

/// A scalar field with exact second-order jets.
using ScalarFieldJet = std::function<Jet2(const Point&)>;

/// The boundary-condition transform u -> L u + G. L vanishes where Dirichlet
/// data is imposed and G carries the data, so the ansatz satisfies the
/// boundary (and initial) conditions for any coefficient vector. One G per
/// solution component; L is shared.
struct ConstrainingOperator {
  ScalarFieldJet L;
  std::vector<ScalarFieldJet> G;

  int components() const { return static_cast<int>(G.size()); }
};

inline ConstrainingOperator identity_constraint(int dim, int components = 1) {
  ConstrainingOperator cop;
  cop.L = [dim](const Point&) { return Jet2::constant(dim, 1.0); };
  for (int c = 0; c < components; ++c)
    cop.G.push_back([dim](const Point&) { return Jet2::constant(dim, 0.0); });
  return cop;
}

/// Jets of the localized constrained basis L(x) omega_j(x) phi_j^k(x) for all
/// k. Zero rows when x is outside box j.
inline void localized_basis_jets(const WindowSet& ws, int j, const RandomBasis& basis,
                                 const ConstrainingOperator& cop, const Point& x, JetBatch& out) {
  const CartesianDecomposition& dec = *ws.dec;
  const int d = dec.dim();
  if (!contains(dec.subdomains[static_cast<std::size_t>(j)], x)) {
    out = JetBatch::Zero(basis.m, jet_len(d));
    return;
  }
  const Jet2 lw = cop.L(x) * window_jet(ws, j, x);
  phi_jets(basis, dec.subdomains[static_cast<std::size_t>(j)], x, out);
  for (int k = 0; k < basis.m; ++k) {
    const Jet2 prod = lw * jet_from_row(out, k, d);
    row_from_jet(out, k, prod);
  }
}

}  // namespace rannddm
