#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rannddm/basis.hpp"
#include "rannddm/geometry.hpp"
#include "rannddm/operators.hpp"
#include "rannddm/reduction.hpp"

namespace rannddm {

/// Block-sparse collocation matrix H = [H_1 ... H_J] plus right-hand sides.
/// Block j holds rows only for collocation points inside box j; F column c is
/// f_c(x_i) - A[G_c](x_i) for component c.
struct BlockSystem {
  int N = 0;           // collocation points
  int p = 0;           // sum of p_j
  int components = 1;
  std::vector<Eigen::MatrixXd> blocks;        // per subdomain: rows(j) x p_j
  std::vector<std::vector<int>> row_indices;  // per subdomain: global row ids
  std::vector<int> column_offsets;            // J+1 prefix sums of p_j
  Eigen::MatrixXd F;                          // N x components
};

inline std::vector<int> make_column_offsets(const std::vector<ReducedLocalBasis>& reduced) {
  std::vector<int> offs(reduced.size() + 1, 0);
  for (std::size_t j = 0; j < reduced.size(); ++j) offs[j + 1] = offs[j] + reduced[j].p;
  return offs;
}

/// Assembles H and F by applying the operator to the reduced constrained
/// basis jets at every collocation point.
inline BlockSystem assemble(const LinearOperator& op,
                            const std::vector<std::function<double(const Point&)>>& rhs,
                            const CartesianDecomposition& dec, const WindowSet& ws,
                            const std::vector<RandomBasis>& bases, const std::vector<ReducedLocalBasis>& reduced,
                            const ConstrainingOperator& cop, const PointSet& collocation) {
  const int J = dec.size();
  const int C = cop.components();
  if (static_cast<int>(rhs.size()) != C) throw std::invalid_argument("one rhs per solution component required");

  BlockSystem sys;
  sys.N = collocation.size();
  sys.components = C;
  sys.column_offsets = make_column_offsets(reduced);
  sys.p = sys.column_offsets.back();
  sys.blocks.resize(static_cast<std::size_t>(J));
  sys.row_indices.resize(static_cast<std::size_t>(J));

  for (int j = 0; j < J; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    const Box& box = dec.subdomains[sj];
    for (int i = 0; i < sys.N; ++i)
      if (contains(box, collocation.points[static_cast<std::size_t>(i)])) sys.row_indices[sj].push_back(i);
    sys.blocks[sj].resize(static_cast<Eigen::Index>(sys.row_indices[sj].size()), reduced[sj].p);
  }

  long long bad_point = -1, bad_subdomain = -1;
  for (int j = 0; j < J; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    const auto& rows = sys.row_indices[sj];
    const Eigen::Index nrows = static_cast<Eigen::Index>(rows.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index r = 0; r < nrows; ++r) {
      JetBatch jets;
      const Point& x = collocation.points[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
      reduced_localized_jets(ws, j, bases[sj], reduced[sj], cop, x, jets);
      for (int k = 0; k < reduced[sj].p; ++k) {
        const double v = op.apply(x, jet_from_row(jets, k, dec.dim()));
        if (!std::isfinite(v)) {
#ifdef _OPENMP
#pragma omp critical
#endif
          {
            bad_point = rows[static_cast<std::size_t>(r)];
            bad_subdomain = j;
          }
        }
        sys.blocks[sj](r, k) = v;
      }
    }
    if (bad_point >= 0)
      throw std::runtime_error("non-finite matrix entry at collocation point " + std::to_string(bad_point) +
                               ", subdomain " + std::to_string(bad_subdomain));
  }

  sys.F.resize(sys.N, C);
  for (int i = 0; i < sys.N; ++i) {
    const Point& x = collocation.points[static_cast<std::size_t>(i)];
    for (int c = 0; c < C; ++c) {
      const double v = rhs[static_cast<std::size_t>(c)](x) - op.apply(x, cop.G[static_cast<std::size_t>(c)](x));
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite right-hand side at collocation point " + std::to_string(i));
      sys.F(i, c) = v;
    }
  }
  return sys;
}

inline Eigen::VectorXd matvec(const BlockSystem& sys, const Eigen::VectorXd& w) {
  if (w.size() != sys.p) throw std::invalid_argument("matvec: coefficient vector has wrong length");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(sys.N);
  for (std::size_t j = 0; j < sys.blocks.size(); ++j) {
    const int off = sys.column_offsets[j];
    const int pj = static_cast<int>(sys.blocks[j].cols());
    const Eigen::VectorXd local = sys.blocks[j] * w.segment(off, pj);
    const auto& rows = sys.row_indices[j];
    for (std::size_t r = 0; r < rows.size(); ++r) y(rows[r]) += local(static_cast<Eigen::Index>(r));
  }
  return y;
}

inline Eigen::VectorXd matvec_transpose(const BlockSystem& sys, const Eigen::VectorXd& r) {
  if (r.size() != sys.N) throw std::invalid_argument("matvec_transpose: residual vector has wrong length");
  Eigen::VectorXd y(sys.p);
  for (std::size_t j = 0; j < sys.blocks.size(); ++j) {
    const auto& rows = sys.row_indices[j];
    Eigen::VectorXd gathered(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) gathered(static_cast<Eigen::Index>(k)) = r(rows[k]);
    y.segment(sys.column_offsets[j], sys.blocks[j].cols()).noalias() = sys.blocks[j].transpose() * gathered;
  }
  return y;
}

/// H^T H restricted to neighboring block pairs; block (j1,j2) with j1 <= j2
/// only. Blocks of interior-disjoint subdomains are exactly zero and omitted.
struct NormalBlocks {
  int p = 0;
  std::vector<int> column_offsets;
  std::map<std::pair<int, int>, Eigen::MatrixXd> blocks;

  const Eigen::MatrixXd* find(int j1, int j2) const {
    auto it = blocks.find({std::min(j1, j2), std::max(j1, j2)});
    return it == blocks.end() ? nullptr : &it->second;
  }
};

inline NormalBlocks normal_blocks(const BlockSystem& sys, const std::vector<std::vector<int>>& neighbor_sets) {
  NormalBlocks nb;
  nb.p = sys.p;
  nb.column_offsets = sys.column_offsets;
  for (int j1 = 0; j1 < static_cast<int>(sys.blocks.size()); ++j1) {
    for (int j2 : neighbor_sets[static_cast<std::size_t>(j1)]) {
      if (j2 < j1) continue;
      const auto& rows1 = sys.row_indices[static_cast<std::size_t>(j1)];
      const auto& rows2 = sys.row_indices[static_cast<std::size_t>(j2)];
      // Row lists are sorted; walk the intersection.
      std::vector<int> i1, i2;
      std::size_t a = 0, b = 0;
      while (a < rows1.size() && b < rows2.size()) {
        if (rows1[a] == rows2[b]) {
          i1.push_back(static_cast<int>(a));
          i2.push_back(static_cast<int>(b));
          ++a;
          ++b;
        } else if (rows1[a] < rows2[b]) {
          ++a;
        } else {
          ++b;
        }
      }
      if (i1.empty()) continue;
      Eigen::MatrixXd g1(static_cast<Eigen::Index>(i1.size()), sys.blocks[static_cast<std::size_t>(j1)].cols());
      Eigen::MatrixXd g2(static_cast<Eigen::Index>(i2.size()), sys.blocks[static_cast<std::size_t>(j2)].cols());
      for (std::size_t k = 0; k < i1.size(); ++k) {
        g1.row(static_cast<Eigen::Index>(k)) = sys.blocks[static_cast<std::size_t>(j1)].row(i1[k]);
        g2.row(static_cast<Eigen::Index>(k)) = sys.blocks[static_cast<std::size_t>(j2)].row(i2[k]);
      }
      nb.blocks[{j1, j2}] = g1.transpose() * g2;
    }
  }
  return nb;
}

/// Collocation-sampled norm of every column of H.
inline Eigen::VectorXd column_norms(const BlockSystem& sys) {
  Eigen::VectorXd norms(sys.p);
  for (std::size_t j = 0; j < sys.blocks.size(); ++j)
    for (Eigen::Index c = 0; c < sys.blocks[j].cols(); ++c)
      norms(sys.column_offsets[j] + c) = sys.blocks[j].col(c).norm();
  return norms;
}

/// Rescales column c of H by 1/scales(c) in place. Used to equilibrate the
/// normal equations; the least-squares problem is unchanged up to the
/// diagonal reparameterization W = y / scales.
inline void scale_columns(BlockSystem& sys, const Eigen::VectorXd& scales) {
  if (scales.size() != sys.p) throw std::invalid_argument("scale_columns: wrong length");
  for (std::size_t j = 0; j < sys.blocks.size(); ++j)
    for (Eigen::Index c = 0; c < sys.blocks[j].cols(); ++c) {
      const double s = scales(sys.column_offsets[j] + c);
      if (s > 0.0) sys.blocks[j].col(c) /= s;
    }
}

inline Eigen::MatrixXd densify(const BlockSystem& sys) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(sys.N, sys.p);
  for (std::size_t j = 0; j < sys.blocks.size(); ++j) {
    const auto& rows = sys.row_indices[j];
    for (std::size_t r = 0; r < rows.size(); ++r)
      H.row(rows[r]).segment(sys.column_offsets[j], sys.blocks[j].cols()) =
          sys.blocks[j].row(static_cast<Eigen::Index>(r));
  }
  return H;
}

inline Eigen::MatrixXd densify(const NormalBlocks& nb) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nb.p, nb.p);
  for (const auto& [key, block] : nb.blocks) {
    const auto [j1, j2] = key;
    A.block(nb.column_offsets[static_cast<std::size_t>(j1)], nb.column_offsets[static_cast<std::size_t>(j2)],
            block.rows(), block.cols()) = block;
    if (j1 != j2)
      A.block(nb.column_offsets[static_cast<std::size_t>(j2)], nb.column_offsets[static_cast<std::size_t>(j1)],
              block.cols(), block.rows()) = block.transpose();
  }
  return A;
}

/// Text export: "rows cols" header then one "row col value" triple per stored
/// entry (zero-based indices).
inline void export_triples(const std::string& path, const BlockSystem& sys) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.precision(17);
  os << sys.N << " " << sys.p << "\n";
  for (std::size_t j = 0; j < sys.blocks.size(); ++j) {
    const auto& rows = sys.row_indices[j];
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (Eigen::Index c = 0; c < sys.blocks[j].cols(); ++c)
        os << rows[r] << " " << sys.column_offsets[j] + c << " " << sys.blocks[j](static_cast<Eigen::Index>(r), c)
           << "\n";
  }
}

/// Dense text export with the same "rows cols" header followed by row-major
/// entries, one row per line.
inline void export_dense(const std::string& path, const Eigen::MatrixXd& A) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.precision(17);
  os << A.rows() << " " << A.cols() << "\n";
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    for (Eigen::Index c = 0; c < A.cols(); ++c) os << A(r, c) << (c + 1 == A.cols() ? '\n' : ' ');
  }
}

}  // namespace rannddm
