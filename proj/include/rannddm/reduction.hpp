#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rannddm/basis.hpp"
#include "rannddm/geometry.hpp"
#include "rannddm/operators.hpp"

namespace rannddm {

/// Values of the localized basis psi_j^k = omega_j phi_j^k sampled at the
/// collocation points inside box j (one row per such point).
struct SampleMatrix {
  Eigen::MatrixXd values;          // N1 x m
  std::vector<int> point_indices;  // rows -> global collocation indices
};

/// Which matrix the truncation threshold acts on: the plain local basis
/// values psi_j^k(x_i) (problem independent, computable offline), or the
/// operator-applied columns A[L omega_j phi_j^k](x_i), i.e. the unreduced
/// collocation block itself. The threshold grids of the reference results
/// are calibrated to the operator route.
enum class PcaMatrix { psi, op_applied };

inline SampleMatrix build_sample_matrix(const WindowSet& ws, int j, const RandomBasis& basis,
                                        const PointSet& collocation) {
  const CartesianDecomposition& dec = *ws.dec;
  const Box& box = dec.subdomains[static_cast<std::size_t>(j)];
  SampleMatrix sm;
  for (int i = 0; i < collocation.size(); ++i)
    if (contains(box, collocation.points[static_cast<std::size_t>(i)])) sm.point_indices.push_back(i);
  if (sm.point_indices.empty())
    throw std::runtime_error("subdomain " + std::to_string(j) + " contains no collocation points");
  sm.values.resize(static_cast<Eigen::Index>(sm.point_indices.size()), basis.m);
  Eigen::VectorXd phi(basis.m);
  for (std::size_t r = 0; r < sm.point_indices.size(); ++r) {
    const Point& x = collocation.points[static_cast<std::size_t>(sm.point_indices[r])];
    const double w = window_value(ws, j, x);
    phi_values(basis, box, x, phi);
    sm.values.row(static_cast<Eigen::Index>(r)) = w * phi.transpose();
  }
  return sm;
}

/// Sample matrix of the operator-applied localized basis: row i holds
/// A[L omega_j phi_j^k](x_i) over the collocation points inside box j. Its
/// SVD drives the alternative truncation route.
inline SampleMatrix build_operator_sample_matrix(const LinearOperator& op, const WindowSet& ws, int j,
                                                 const RandomBasis& basis, const ConstrainingOperator& cop,
                                                 const PointSet& collocation) {
  const CartesianDecomposition& dec = *ws.dec;
  const Box& box = dec.subdomains[static_cast<std::size_t>(j)];
  SampleMatrix sm;
  for (int i = 0; i < collocation.size(); ++i)
    if (contains(box, collocation.points[static_cast<std::size_t>(i)])) sm.point_indices.push_back(i);
  if (sm.point_indices.empty())
    throw std::runtime_error("subdomain " + std::to_string(j) + " contains no collocation points");
  sm.values.resize(static_cast<Eigen::Index>(sm.point_indices.size()), basis.m);
  const Eigen::Index nrows = static_cast<Eigen::Index>(sm.point_indices.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (Eigen::Index r = 0; r < nrows; ++r) {
    JetBatch jets;
    const Point& x = collocation.points[static_cast<std::size_t>(sm.point_indices[static_cast<std::size_t>(r)])];
    localized_basis_jets(ws, j, basis, cop, x, jets);
    for (int k = 0; k < basis.m; ++k)
      sm.values(r, k) = op.apply(x, jet_from_row(jets, k, dec.dim()));
  }
  return sm;
}

/// Principal-component truncation of one subdomain's local basis: the columns
/// of V span the directions whose singular values exceed tau.
struct ReducedLocalBasis {
  Eigen::MatrixXd V;               // m x p, orthonormal columns
  int p = 0;                       // effective neuron count
  Eigen::VectorXd singular_values; // all min(N1,m) values, nonincreasing
};

/// Reduced SVD of the sample matrix; keeps the columns of V with sigma > tau
/// (strictly), at least one. Column signs are fixed so the first nonzero
/// entry of each kept column is nonnegative.
inline ReducedLocalBasis truncate(const SampleMatrix& sample, double tau) {
  if (tau < 0.0) throw std::invalid_argument("truncation threshold tau must be >= 0");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sample.values, Eigen::ComputeThinV);
  ReducedLocalBasis out;
  out.singular_values = svd.singularValues();
  int keep = 0;
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i)
    if (out.singular_values(i) > tau) ++keep;
  if (keep == 0) keep = 1;  // never hand an empty block downstream
  out.p = keep;
  out.V = svd.matrixV().leftCols(keep);
  for (int c = 0; c < keep; ++c) {
    for (Eigen::Index r = 0; r < out.V.rows(); ++r) {
      if (out.V(r, c) != 0.0) {
        if (out.V(r, c) < 0.0) out.V.col(c) = -out.V.col(c);
        break;
      }
    }
  }
  return out;
}

/// Pass-through reduction (tau "off"): V = identity.
inline ReducedLocalBasis identity_reduction(int m) {
  ReducedLocalBasis out;
  out.V = Eigen::MatrixXd::Identity(m, m);
  out.p = m;
  out.singular_values = Eigen::VectorXd::Zero(0);
  return out;
}

/// Jets of the p_j constrained reduced basis functions
/// L omega_j (V^T Phi_j)_k; zero rows outside box j.
inline void reduced_localized_jets(const WindowSet& ws, int j, const RandomBasis& basis,
                                   const ReducedLocalBasis& rlb, const ConstrainingOperator& cop, const Point& x,
                                   JetBatch& out) {
  const CartesianDecomposition& dec = *ws.dec;
  const int d = dec.dim();
  if (!contains(dec.subdomains[static_cast<std::size_t>(j)], x)) {
    out = JetBatch::Zero(rlb.p, jet_len(d));
    return;
  }
  JetBatch phi;
  phi_jets(basis, dec.subdomains[static_cast<std::size_t>(j)], x, phi);
  out.noalias() = rlb.V.transpose() * phi;  // jets are linear in the basis
  const Jet2 lw = cop.L(x) * window_jet(ws, j, x);
  for (int k = 0; k < rlb.p; ++k) {
    const Jet2 prod = lw * jet_from_row(out, k, d);
    row_from_jet(out, k, prod);
  }
}

/// Values-only variant: L(x) omega_j(x) (V^T phi)(x).
inline void reduced_localized_values(const WindowSet& ws, int j, const RandomBasis& basis,
                                     const ReducedLocalBasis& rlb, double L_value, const Point& x,
                                     Eigen::VectorXd& out) {
  const CartesianDecomposition& dec = *ws.dec;
  if (!contains(dec.subdomains[static_cast<std::size_t>(j)], x)) {
    out = Eigen::VectorXd::Zero(rlb.p);
    return;
  }
  Eigen::VectorXd phi;
  phi_values(basis, dec.subdomains[static_cast<std::size_t>(j)], x, phi);
  const double w = window_value(ws, j, x);
  out.noalias() = rlb.V.transpose() * phi;
  out *= L_value * w;
}

/// Diagnostic dump, one row per retained-or-not singular value.
inline void write_singular_values_csv(const std::string& path, const std::vector<ReducedLocalBasis>& bases) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "subdomain,index,sigma\n";
  for (std::size_t j = 0; j < bases.size(); ++j)
    for (Eigen::Index i = 0; i < bases[j].singular_values.size(); ++i)
      os << j << "," << i << "," << bases[j].singular_values(i) << "\n";
}

}  // namespace rannddm
