#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rannddm/assembly.hpp"
#include "rannddm/geometry.hpp"

namespace rannddm {

enum class SchwarzKind { AS, SAS, RAS };

inline const char* to_string(SchwarzKind k) {
  switch (k) {
    case SchwarzKind::AS: return "AS";
    case SchwarzKind::SAS: return "SAS";
    case SchwarzKind::RAS: return "RAS";
  }
  return "?";
}

/// Extended restriction index sets: S_i collects the columns of every block
/// whose subdomain overlaps box i, i.e. all basis functions whose support
/// meets box i. Each column is owned by the block that generated it.
struct IndexSets {
  std::vector<std::vector<int>> sets;  // per subdomain, sorted
  std::vector<int> owner;              // column -> generating subdomain
  std::vector<int> multiplicity;       // column -> #{i : column in S_i}
  int p = 0;
};

inline IndexSets build_index_sets(const CartesianDecomposition& dec, const std::vector<int>& column_offsets) {
  const int J = dec.size();
  IndexSets out;
  out.p = column_offsets.back();
  out.owner.resize(static_cast<std::size_t>(out.p));
  for (int j = 0; j < J; ++j)
    for (int c = column_offsets[static_cast<std::size_t>(j)]; c < column_offsets[static_cast<std::size_t>(j) + 1]; ++c)
      out.owner[static_cast<std::size_t>(c)] = j;

  out.sets.resize(static_cast<std::size_t>(J));
  for (int i = 0; i < J; ++i) {
    // neighbor_sets are sorted ascending, so the concatenated ranges are too.
    for (int j : dec.neighbor_sets[static_cast<std::size_t>(i)])
      for (int c = column_offsets[static_cast<std::size_t>(j)]; c < column_offsets[static_cast<std::size_t>(j) + 1];
           ++c)
        out.sets[static_cast<std::size_t>(i)].push_back(c);
  }

  out.multiplicity.assign(static_cast<std::size_t>(out.p), 0);
  for (const auto& s : out.sets)
    for (int c : s) ++out.multiplicity[static_cast<std::size_t>(c)];
  return out;
}

/// One-level overlapping Schwarz preconditioner for H^T H. The local
/// matrices A_i = (H^T H)[S_i, S_i] are symmetric positive semidefinite;
/// their pseudo-inverses are taken through a self-adjoint eigendecomposition
/// with eigenvalues below 1e-12 of the leading one truncated. A factored
/// pseudo-inverse applied as V diag(1/lambda) V^T keeps the AS operator
/// numerically symmetric, which a pivoted-QR solve does not once the local
/// matrices are rank deficient.
struct LocalSolve {
  Eigen::MatrixXd basis;        // n x rank eigenvectors of the kept spectrum
  Eigen::VectorXd inv_eigs;     // rank
  int rank = 0;
  double cond_estimate = 0.0;   // kept-spectrum lambda_max / lambda_min

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (rank == 0) return Eigen::VectorXd::Zero(rhs.size());
    return basis * inv_eigs.cwiseProduct(basis.transpose() * rhs).eval();
  }
};

inline constexpr double kLocalRankCutoff = 1e-12;

struct SchwarzPreconditioner {
  SchwarzKind kind = SchwarzKind::AS;
  IndexSets index_sets;
  std::vector<LocalSolve> local_factors;
  std::vector<int> local_ranks;

  int size() const { return index_sets.p; }
};

inline SchwarzPreconditioner build_preconditioner(SchwarzKind kind, const NormalBlocks& nb, IndexSets index_sets) {
  SchwarzPreconditioner pre;
  pre.kind = kind;
  pre.index_sets = std::move(index_sets);
  const int J = static_cast<int>(pre.index_sets.sets.size());
  pre.local_factors.resize(static_cast<std::size_t>(J));
  pre.local_ranks.resize(static_cast<std::size_t>(J));

  // S_i concatenates whole block column ranges, so A_i is gathered blockwise.
  std::vector<int> col_owner(static_cast<std::size_t>(nb.p));
  for (std::size_t j = 0; j + 1 < nb.column_offsets.size(); ++j)
    for (int c = nb.column_offsets[j]; c < nb.column_offsets[j + 1]; ++c)
      col_owner[static_cast<std::size_t>(c)] = static_cast<int>(j);

  for (int i = 0; i < J; ++i) {
    const auto& S = pre.index_sets.sets[static_cast<std::size_t>(i)];
    if (S.empty()) throw std::runtime_error("empty index set for subdomain " + std::to_string(i));
    const Eigen::Index n = static_cast<Eigen::Index>(S.size());

    // Blocks present in S_i, in order, with their offsets inside A_i.
    std::vector<std::pair<int, int>> parts;  // (block id, offset in A_i)
    for (std::size_t k = 0; k < S.size();) {
      const int j = col_owner[static_cast<std::size_t>(S[k])];
      parts.emplace_back(j, static_cast<int>(k));
      k += static_cast<std::size_t>(nb.column_offsets[static_cast<std::size_t>(j) + 1] -
                                    nb.column_offsets[static_cast<std::size_t>(j)]);
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [j1, off1] : parts)
      for (const auto& [j2, off2] : parts) {
        const Eigen::MatrixXd* block = nb.find(j1, j2);
        if (block == nullptr) continue;  // interior-disjoint pair, exact zero
        if (j1 <= j2)
          A.block(off1, off2, block->rows(), block->cols()) = *block;
        else
          A.block(off1, off2, block->cols(), block->rows()) = block->transpose();
      }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
    const double cutoff = kLocalRankCutoff * std::max(0.0, ev(n - 1));
    int first_kept = static_cast<int>(n);
    for (Eigen::Index k = 0; k < n; ++k)
      if (ev(k) > cutoff) {
        first_kept = static_cast<int>(k);
        break;
      }
    LocalSolve& loc = pre.local_factors[static_cast<std::size_t>(i)];
    loc.rank = static_cast<int>(n) - first_kept;
    loc.basis = es.eigenvectors().rightCols(loc.rank);
    loc.inv_eigs = ev.tail(loc.rank).cwiseInverse();
    loc.cond_estimate = loc.rank > 0 ? ev(n - 1) / ev(first_kept) : 0.0;
    pre.local_ranks[static_cast<std::size_t>(i)] = loc.rank;
  }
  return pre;
}

/// Applies M^{-1} v. AS sums the prolongated local solves; SAS scales each
/// solved entry by 1/multiplicity; RAS keeps only entries owned by the
/// solving subdomain. Summation order over subdomains is fixed.
inline Eigen::VectorXd apply(const SchwarzPreconditioner& pre, const Eigen::VectorXd& v) {
  if (v.size() != pre.size()) throw std::invalid_argument("preconditioner apply: wrong vector length");
  const int J = static_cast<int>(pre.index_sets.sets.size());
  std::vector<Eigen::VectorXd> local(static_cast<std::size_t>(J));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < J; ++i) {
    const auto& S = pre.index_sets.sets[static_cast<std::size_t>(i)];
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(S.size()));
    for (std::size_t k = 0; k < S.size(); ++k) rhs(static_cast<Eigen::Index>(k)) = v(S[k]);
    local[static_cast<std::size_t>(i)] = pre.local_factors[static_cast<std::size_t>(i)].solve(rhs);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(pre.size());
  for (int i = 0; i < J; ++i) {
    const auto& S = pre.index_sets.sets[static_cast<std::size_t>(i)];
    const Eigen::VectorXd& z = local[static_cast<std::size_t>(i)];
    switch (pre.kind) {
      case SchwarzKind::AS:
        for (std::size_t k = 0; k < S.size(); ++k) out(S[k]) += z(static_cast<Eigen::Index>(k));
        break;
      case SchwarzKind::SAS:
        for (std::size_t k = 0; k < S.size(); ++k)
          out(S[k]) += z(static_cast<Eigen::Index>(k)) / pre.index_sets.multiplicity[static_cast<std::size_t>(S[k])];
        break;
      case SchwarzKind::RAS:
        for (std::size_t k = 0; k < S.size(); ++k)
          if (pre.index_sets.owner[static_cast<std::size_t>(S[k])] == i) out(S[k]) += z(static_cast<Eigen::Index>(k));
        break;
    }
  }
  return out;
}

/// Applies M^{-T} v. The local matrices are symmetric, so transposition just
/// moves the SAS/RAS weighting in front of the local solve; AS is symmetric.
inline Eigen::VectorXd apply_transpose(const SchwarzPreconditioner& pre, const Eigen::VectorXd& v) {
  if (v.size() != pre.size()) throw std::invalid_argument("preconditioner apply: wrong vector length");
  const int J = static_cast<int>(pre.index_sets.sets.size());
  std::vector<Eigen::VectorXd> local(static_cast<std::size_t>(J));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < J; ++i) {
    const auto& S = pre.index_sets.sets[static_cast<std::size_t>(i)];
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(S.size()));
    for (std::size_t k = 0; k < S.size(); ++k) {
      double val = v(S[k]);
      if (pre.kind == SchwarzKind::SAS)
        val /= pre.index_sets.multiplicity[static_cast<std::size_t>(S[k])];
      else if (pre.kind == SchwarzKind::RAS)
        val = (pre.index_sets.owner[static_cast<std::size_t>(S[k])] == i) ? val : 0.0;
      rhs(static_cast<Eigen::Index>(k)) = val;
    }
    local[static_cast<std::size_t>(i)] = pre.local_factors[static_cast<std::size_t>(i)].solve(rhs);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(pre.size());
  for (int i = 0; i < J; ++i) {
    const auto& S = pre.index_sets.sets[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < S.size(); ++k) out(S[k]) += local[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(k));
  }
  return out;
}

/// Per-subdomain rank and local condition estimate over the kept spectrum.
inline void write_local_diagnostics_csv(const std::string& path, const SchwarzPreconditioner& pre) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "subdomain,size,rank,cond_estimate\n";
  for (std::size_t i = 0; i < pre.local_factors.size(); ++i)
    os << i << "," << pre.index_sets.sets[i].size() << "," << pre.local_ranks[i] << ","
       << pre.local_factors[i].cond_estimate << "\n";
}

}  // namespace rannddm
