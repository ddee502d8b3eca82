#include <catch_amalgamated.hpp>

#include "rannddm/krylov.hpp"
#include "rannddm/problems.hpp"
#include "rannddm/schwarz.hpp"
#include "test_util.hpp"

using namespace rannddm;

namespace {

struct Setup {
  CartesianDecomposition dec;
  std::vector<int> column_offsets;
  BlockSystem sys;
  NormalBlocks nb;
  IndexSets idx;
};

Setup build_setup(std::vector<int> counts, int m, int res, std::uint64_t seed, double tau = -1.0, int n = 2) {
  Setup s;
  ProblemSpec prob;
  if (counts.size() == 2) prob = example1(n);
  else prob = example3();
  s.dec = build_decomposition(prob.domain, counts, 2.0);
  std::vector<int> resv(counts.size(), res);
  const PointSet colloc = uniform_grid(prob.domain, resv, PointKind::collocation);
  const WindowSet ws = make_window_set(s.dec);
  std::vector<RandomBasis> bases;
  std::vector<ReducedLocalBasis> reduced;
  for (int j = 0; j < s.dec.size(); ++j) {
    bases.push_back(make_random_basis(subdomain_seed(seed, j), m, s.dec.dim(), Activation::Tanh));
    if (tau >= 0.0)
      reduced.push_back(truncate(build_sample_matrix(ws, j, bases.back(), colloc), tau));
    else
      reduced.push_back(identity_reduction(m));
  }
  s.sys = assemble(prob.op, {prob.rhs[0]}, s.dec, ws, bases, reduced,
                   ConstrainingOperator{prob.constraint.L, {prob.constraint.G[0]}}, colloc);
  s.column_offsets = s.sys.column_offsets;
  s.nb = normal_blocks(s.sys, s.dec.neighbor_sets);
  s.idx = build_index_sets(s.dec, s.column_offsets);
  return s;
}

Eigen::MatrixXd precond_times(const SchwarzPreconditioner& pre, const Eigen::MatrixXd& A) {
  Eigen::MatrixXd out(A.rows(), A.cols());
  for (Eigen::Index c = 0; c < A.cols(); ++c) out.col(c) = apply(pre, A.col(c));
  return out;
}

}  // namespace

TEST_CASE("index sets: extended neighbor reading") {
  // 2x2 with delta = 2: everything overlaps, so S_i is all columns with
  // multiplicity 4.
  const Setup s = build_setup({2, 2}, 4, 10, 3);
  REQUIRE(s.idx.p == 16);
  for (int i = 0; i < 4; ++i) REQUIRE(s.idx.sets[static_cast<std::size_t>(i)].size() == 16);
  for (int c = 0; c < 16; ++c) {
    CHECK(s.idx.multiplicity[static_cast<std::size_t>(c)] == 4);
    CHECK(s.idx.owner[static_cast<std::size_t>(c)] == c / 4);
  }

  // Single subdomain: one set holding every column once.
  const Setup s1 = build_setup({1, 1}, 5, 8, 4);
  REQUIRE(s1.idx.sets.size() == 1);
  CHECK(s1.idx.sets[0].size() == 5);
  CHECK(s1.idx.multiplicity == std::vector<int>(5, 1));

  // Interior subdomain of a 4x4 split sees its full 3x3 neighbor patch.
  const Setup s4 = build_setup({4, 4}, 2, 16, 5);
  const int interior = 5;  // (1,1)
  CHECK(s4.dec.neighbor_sets[interior].size() == 9);
  CHECK(s4.idx.sets[interior].size() == 18);  // 9 blocks x m=2

  // Every column appears in its owner's set.
  for (int c = 0; c < s4.idx.p; ++c) {
    const auto& own = s4.idx.sets[static_cast<std::size_t>(s4.idx.owner[static_cast<std::size_t>(c)])];
    CHECK(std::find(own.begin(), own.end(), c) != own.end());
  }
}

TEST_CASE("partition-of-unity identity for SAS and RAS weights") {
  for (const auto& counts : {std::vector<int>{2, 2}, std::vector<int>{4, 4}, std::vector<int>{3, 3}}) {
    const Setup s = build_setup(counts, 3, 12, 9);
    for (const SchwarzKind kind : {SchwarzKind::SAS, SchwarzKind::RAS}) {
      // Assemble sum_i R_i^T D_i R_i explicitly as a diagonal.
      Eigen::VectorXd diag = Eigen::VectorXd::Zero(s.idx.p);
      for (std::size_t i = 0; i < s.idx.sets.size(); ++i)
        for (int c : s.idx.sets[i]) {
          if (kind == SchwarzKind::SAS)
            diag(c) += 1.0 / s.idx.multiplicity[static_cast<std::size_t>(c)];
          else if (s.idx.owner[static_cast<std::size_t>(c)] == static_cast<int>(i))
            diag(c) += 1.0;
        }
      CHECK((diag.array() - 1.0).abs().maxCoeff() <= 1e-15);
    }
  }
}

TEST_CASE("block-Jacobi limit: diagonal normal matrix with disjoint sets") {
  // Hand-built: diagonal H^T H and singleton boxes. A single subdomain with
  // every column gives the exact inverse.
  const Setup s = build_setup({1, 1}, 6, 10, 17);
  const SchwarzPreconditioner pre = build_preconditioner(SchwarzKind::AS, s.nb, s.idx);
  const Eigen::MatrixXd A = densify(s.nb);
  SplitMix64 rng(23);
  Eigen::VectorXd v(s.idx.p);
  for (int i = 0; i < v.size(); ++i) v(i) = rng.next_symmetric();
  const Eigen::VectorXd z = apply(pre, v);
  const Eigen::VectorXd dense = A.colPivHouseholderQr().solve(v);
  CHECK((z - dense).norm() <= 1e-10 * dense.norm());
  CHECK(apply(pre, Eigen::VectorXd::Zero(s.idx.p)).norm() == 0.0);
}

TEST_CASE("2x2 overlap-everything case is the exact-preconditioner limit") {
  const Setup s = build_setup({2, 2}, 8, 14, 29, 1e-3);
  const Eigen::MatrixXd A = densify(s.nb);

  // SAS: M^-1 A acts as the identity on the row space.
  const SchwarzPreconditioner sas = build_preconditioner(SchwarzKind::SAS, s.nb, s.idx);
  SplitMix64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd w(s.idx.p);
    for (int i = 0; i < w.size(); ++i) w(i) = rng.next_symmetric();
    const Eigen::VectorXd row_space = A * w;  // in range(A)
    const Eigen::VectorXd back = apply(sas, A * row_space);
    CHECK((back - row_space).norm() <= 1e-8 * row_space.norm());
  }

  // AS stacks the same solve once per subdomain: 4x the pseudo-identity.
  const SchwarzPreconditioner as = build_preconditioner(SchwarzKind::AS, s.nb, s.idx);
  Eigen::VectorXd w(s.idx.p);
  for (int i = 0; i < w.size(); ++i) w(i) = rng.next_symmetric();
  const Eigen::VectorXd row_space = A * w;
  CHECK((apply(as, A * row_space) - 4.0 * row_space).norm() <= 1e-8 * row_space.norm());

  // GMRES with the AS preconditioner converges in one iteration.
  LinearMap Amap = dense_map(A);
  LinearMap M{s.idx.p, [&as](const Eigen::VectorXd& x) { return apply(as, x); },
              [&as](const Eigen::VectorXd& x) { return apply_transpose(as, x); }, false};
  SolveConfig cfg;
  cfg.rel_tol = 1e-5;
  const SolveReport rep = gmres(Amap, M, Eigen::VectorXd(A * row_space), cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 1);
}

TEST_CASE("AS apply is symmetric; SAS/RAS transposes are consistent") {
  const Setup s = build_setup({3, 3}, 4, 15, 41);
  SplitMix64 rng(47);
  for (const SchwarzKind kind : {SchwarzKind::AS, SchwarzKind::SAS, SchwarzKind::RAS}) {
    const SchwarzPreconditioner pre = build_preconditioner(kind, s.nb, s.idx);
    Eigen::VectorXd a(s.idx.p), b(s.idx.p);
    for (int trial = 0; trial < 10; ++trial) {
      for (int i = 0; i < a.size(); ++i) a(i) = rng.next_symmetric();
      for (int i = 0; i < b.size(); ++i) b(i) = rng.next_symmetric();
      const double left = apply(pre, a).dot(b);
      const double right = a.dot(kind == SchwarzKind::AS ? apply(pre, b) : apply_transpose(pre, b));
      CHECK(testutil::rel_err(left, right, 1e-6) <= 1e-10);
    }
  }
  CHECK_THROWS_AS(apply(build_preconditioner(SchwarzKind::AS, s.nb, s.idx), Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);
}

TEST_CASE("coloring bound and nonnegative spectrum for AS") {
  // 2-D: lambda_max <= 16 = (max boxes per point)^2; tight for 4x4.
  const Setup s2 = build_setup({4, 4}, 8, 20, 53);
  const SchwarzPreconditioner pre2 = build_preconditioner(SchwarzKind::AS, s2.nb, s2.idx);
  const Eigen::MatrixXd MA2 = precond_times(pre2, densify(s2.nb));
  double maxre = 0.0, minre = 0.0;
  for (const auto& ev : spectrum(MA2)) {
    maxre = std::max(maxre, ev.real());
    minre = std::min(minre, ev.real());
  }
  CHECK(maxre <= 16.0 * (1.0 + 1e-6));
  CHECK(minre >= -1e-6 * maxre);

  // 3-D 2x2x2: bound 64; the all-overlapping case sits at 8.
  const Setup s3 = build_setup({2, 2, 2}, 6, 8, 59);
  const SchwarzPreconditioner pre3 = build_preconditioner(SchwarzKind::AS, s3.nb, s3.idx);
  const Eigen::MatrixXd MA3 = precond_times(pre3, densify(s3.nb));
  double maxre3 = 0.0;
  for (const auto& ev : spectrum(MA3)) maxre3 = std::max(maxre3, ev.real());
  CHECK(maxre3 <= 64.0 * (1.0 + 1e-6));
}

TEST_CASE("local rank diagnostics") {
  const Setup s = build_setup({2, 2}, 6, 12, 61);
  const SchwarzPreconditioner pre = build_preconditioner(SchwarzKind::AS, s.nb, s.idx);
  REQUIRE(pre.local_ranks.size() == 4);
  for (int r : pre.local_ranks) {
    CHECK(r >= 1);
    CHECK(r <= s.idx.p);
  }
  write_local_diagnostics_csv("schwarz_diag.csv", pre);
  std::ifstream in("schwarz_diag.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "subdomain,size,rank,cond_estimate");
}
