#include <catch_amalgamated.hpp>

#include "rannddm/problems.hpp"
#include "rannddm/reduction.hpp"
#include "test_util.hpp"

using namespace rannddm;

namespace {

struct Setup {
  CartesianDecomposition dec;
  std::vector<RandomBasis> bases;
  PointSet colloc;
};

Setup make_setup(int l, int m, int res, std::uint64_t seed = 31) {
  Setup s;
  s.dec = build_decomposition(make_box(2, {0.0, 0.0}, {1.0, 1.0}), {l, l}, 2.0);
  for (int j = 0; j < s.dec.size(); ++j)
    s.bases.push_back(make_random_basis(subdomain_seed(seed, j), m, 2, Activation::Tanh));
  s.colloc = uniform_grid(s.dec.domain, {res, res}, PointKind::collocation);
  return s;
}

}  // namespace

TEST_CASE("sample matrix rows are the in-box collocation points") {
  Setup s = make_setup(1, 5, 10);
  const WindowSet ws = make_window_set(s.dec);
  const SampleMatrix sm = build_sample_matrix(ws, 0, s.bases[0], s.colloc);
  CHECK(sm.values.rows() == 100);  // single subdomain covers everything
  CHECK(sm.values.cols() == 5);

  // Column k equals the pointwise product of window and phi columns,
  // recomputed through the jet path as an independent route.
  Setup s2 = make_setup(3, 4, 12);
  const WindowSet ws2 = make_window_set(s2.dec);
  const SampleMatrix sm2 = build_sample_matrix(ws2, 4, s2.bases[4], s2.colloc);
  for (std::size_t r = 0; r < sm2.point_indices.size(); ++r) {
    const Point& x = s2.colloc.points[static_cast<std::size_t>(sm2.point_indices[r])];
    JetBatch phi;
    phi_jets(s2.bases[4], s2.dec.subdomains[4], x, phi);
    const double w = window_jet(ws2, 4, x).v;
    for (int k = 0; k < 4; ++k)
      CHECK(testutil::rel_err(sm2.values(static_cast<Eigen::Index>(r), k), w * phi(k, 0), 1e-8) < 1e-12);
  }

  // A subdomain with no collocation points is reported by name; box 0 of a
  // 4x4 split spans [-1/3, 1/3] and misses the single cell-centered point.
  Setup s4 = make_setup(4, 3, 6);
  const WindowSet ws4 = make_window_set(s4.dec);
  const PointSet tiny = uniform_grid(make_box(2, {0.0, 0.0}, {1.0, 1.0}), {1, 1}, PointKind::collocation);
  CHECK_THROWS_WITH(build_sample_matrix(ws4, 0, s4.bases[0], tiny), Catch::Matchers::ContainsSubstring("subdomain 0"));
}

TEST_CASE("truncation follows the singular-value threshold") {
  SampleMatrix sm;
  sm.point_indices = {0, 1, 2};
  sm.values = Eigen::MatrixXd::Zero(3, 3);
  sm.values.diagonal() << 3.0, 1.0, 1e-5;

  const ReducedLocalBasis r1 = truncate(sm, 1e-3);
  CHECK(r1.p == 2);
  CHECK(r1.singular_values(0) == Catch::Approx(3.0));
  CHECK(r1.singular_values(2) == Catch::Approx(1e-5));
  // Canonical columns up to sign; the sign convention fixes them to +e1, +e2.
  CHECK(r1.V(0, 0) == Catch::Approx(1.0));
  CHECK(r1.V(1, 1) == Catch::Approx(1.0));
  CHECK(std::abs(r1.V(2, 0)) < 1e-12);

  const ReducedLocalBasis r0 = truncate(sm, 0.0);
  CHECK(r0.p == 3);

  const ReducedLocalBasis rbig = truncate(sm, 10.0);
  CHECK(rbig.p == 1);  // floor rule

  CHECK_THROWS_AS(truncate(sm, -1.0), std::invalid_argument);
}

TEST_CASE("orthonormality, reconstruction bound, and DoF monotonicity") {
  Setup s = make_setup(3, 12, 20);
  const WindowSet ws = make_window_set(s.dec);

  int prev_total = std::numeric_limits<int>::max();
  for (const double tau : {1e-4, 1e-3, 1e-2, 1e-1}) {
    int total = 0;
    for (int j = 0; j < s.dec.size(); ++j) {
      const SampleMatrix sm = build_sample_matrix(ws, j, s.bases[static_cast<std::size_t>(j)], s.colloc);
      const ReducedLocalBasis r = truncate(sm, tau);
      total += r.p;

      const Eigen::MatrixXd gram = r.V.transpose() * r.V;
      CHECK((gram - Eigen::MatrixXd::Identity(r.p, r.p)).cwiseAbs().maxCoeff() < 1e-12);

      double discarded = 0.0;
      for (Eigen::Index i = r.p; i < r.singular_values.size(); ++i)
        discarded += r.singular_values(i) * r.singular_values(i);
      const double resid = (sm.values - sm.values * r.V * r.V.transpose()).norm();
      CHECK(resid <= std::sqrt(discarded) + 1e-10);
    }
    CHECK(total <= s.dec.size() * 12);
    CHECK(total <= prev_total);
    prev_total = total;
  }
}

TEST_CASE("reduced localized jets are V-combinations of the local basis") {
  Setup s = make_setup(2, 6, 12);
  const WindowSet ws = make_window_set(s.dec);
  const ProblemSpec prob = example1(1);
  SplitMix64 rng(123);

  // V = identity reproduces the unreduced jets.
  const ReducedLocalBasis ident = identity_reduction(6);
  JetBatch a, b;
  const Point x0 = make_point({0.3, 0.3});
  reduced_localized_jets(ws, 0, s.bases[0], ident, prob.constraint, x0, a);
  localized_basis_jets(ws, 0, s.bases[0], prob.constraint, x0, b);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);

  // p = 1 with V = e1 picks out the first localized jet.
  ReducedLocalBasis first;
  first.p = 1;
  first.V = Eigen::MatrixXd::Zero(6, 1);
  first.V(0, 0) = 1.0;
  reduced_localized_jets(ws, 0, s.bases[0], first, prob.constraint, x0, a);
  CHECK((a.row(0) - b.row(0)).cwiseAbs().maxCoeff() < 1e-14);

  // General V: values match the direct summation sum_i V_ik psi_i.
  const SampleMatrix sm = build_sample_matrix(ws, 1, s.bases[1], s.colloc);
  const ReducedLocalBasis red = truncate(sm, 1e-3);
  for (int trial = 0; trial < 20; ++trial) {
    const Point x = testutil::random_point_in(s.dec.subdomains[1], rng);
    if (!contains(s.dec.domain, x)) continue;
    reduced_localized_jets(ws, 1, s.bases[1], red, prob.constraint, x, a);
    localized_basis_jets(ws, 1, s.bases[1], prob.constraint, x, b);
    for (int k = 0; k < red.p; ++k) {
      double direct = 0.0;
      for (int i = 0; i < 6; ++i) direct += red.V(i, k) * b(i, 0);
      CHECK(testutil::rel_err(a(k, 0), direct, 1e-6) < 1e-12);
    }
  }
}

TEST_CASE("singular value CSV dump") {
  SampleMatrix sm;
  sm.point_indices = {0, 1};
  sm.values = Eigen::MatrixXd::Identity(2, 2) * 2.0;
  std::vector<ReducedLocalBasis> rs = {truncate(sm, 0.5)};
  const std::string path = "sv_test.csv";
  write_singular_values_csv(path, rs);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "subdomain,index,sigma");
  CHECK(row == "0,0,2");
}
