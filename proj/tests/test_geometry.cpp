#include <catch_amalgamated.hpp>

#include "rannddm/geometry.hpp"
#include "rannddm/random.hpp"
#include "test_util.hpp"

using namespace rannddm;

TEST_CASE("unit square 4x4 delta=2 reproduces the reference layout") {
  const Box domain = make_box(2, {0.0, 0.0}, {1.0, 1.0});
  const auto dec = build_decomposition(domain, {4, 4}, 2.0);
  REQUIRE(dec.size() == 16);

  // Per-axis centers {0, 1/3, 2/3, 1}, half-width 1/3.
  const double third = 1.0 / 3.0;
  CHECK(dec.centers[0][0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(dec.centers[15][0] == Catch::Approx(1.0));
  CHECK(dec.half_widths[0][0] == Catch::Approx(third));
  CHECK(dec.half_widths[0][1] == Catch::Approx(third));

  // First subdomain spans [-1/3, 1/3] per axis; boxes are not clipped.
  CHECK(dec.subdomains[0].lo[0] == Catch::Approx(-third));
  CHECK(dec.subdomains[0].hi[0] == Catch::Approx(third));
  CHECK(dec.subdomains[0].lo[1] == Catch::Approx(-third));
}

TEST_CASE("2x2 delta=2: every pair of boxes overlaps") {
  const auto dec = build_decomposition(make_box(2, {0.0, 0.0}, {1.0, 1.0}), {2, 2}, 2.0);
  REQUIRE(dec.size() == 4);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(dec.neighbor_sets[static_cast<std::size_t>(i)].size() == 4);
    for (int j = 0; j < 4; ++j) CHECK(dec.neighbor_sets[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == j);
  }
}

TEST_CASE("single count along an axis keeps the full extent") {
  const auto dec = build_decomposition(make_box(1, {-2.0}, {3.0}), {1}, 2.0);
  REQUIRE(dec.size() == 1);
  CHECK(dec.subdomains[0].lo[0] == Catch::Approx(-2.0));
  CHECK(dec.subdomains[0].hi[0] == Catch::Approx(3.0));
  REQUIRE(dec.neighbor_sets[0] == std::vector<int>{0});
}

TEST_CASE("decomposition input validation") {
  const Box domain = make_box(2, {0.0, 0.0}, {1.0, 1.0});
  CHECK_THROWS_AS(build_decomposition(domain, {4, 4}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_decomposition(domain, {0, 4}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(build_decomposition(domain, {4}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(make_box(2, {0.0, 1.0}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("uniform grids are cell-centered") {
  const auto g1 = uniform_grid(make_box(1, {0.0}, {1.0}), {2}, PointKind::collocation);
  REQUIRE(g1.size() == 2);
  CHECK(g1.points[0][0] == Catch::Approx(0.25));
  CHECK(g1.points[1][0] == Catch::Approx(0.75));

  const auto g2 = uniform_grid(make_box(2, {0.0, 0.0}, {1.0, 1.0}), {40, 40}, PointKind::collocation);
  REQUIRE(g2.size() == 1600);
  for (const auto& x : g2.points) {
    CHECK(x[0] > 0.0);
    CHECK(x[0] < 1.0);
    CHECK(x[1] > 0.0);
    CHECK(x[1] < 1.0);
  }

  const auto g3 = uniform_grid(make_box(2, {-1.0, 0.0}, {1.0, 1.0}), {4, 2}, PointKind::test);
  REQUIRE(g3.size() == 8);
  double minx = 1e9, mint = 1e9;
  for (const auto& x : g3.points) {
    minx = std::min(minx, x[0]);
    mint = std::min(mint, x[1]);
  }
  CHECK(minx == Catch::Approx(-0.75));
  CHECK(mint == Catch::Approx(0.25));
}

TEST_CASE("normalize_to_box and contains") {
  const Box b = make_box(1, {0.0}, {1.0});
  CHECK(normalize_to_box(b, make_point({0.5}))[0] == Catch::Approx(0.0).margin(1e-16));
  CHECK(normalize_to_box(b, make_point({1.0}))[0] == Catch::Approx(1.0));
  CHECK(normalize_to_box(b, make_point({0.0}))[0] == Catch::Approx(-1.0));

  const Box sq = make_box(2, {-1.0 / 3.0, -1.0 / 3.0}, {1.0 / 3.0, 1.0 / 3.0});
  const Point n = normalize_to_box(sq, make_point({1.0 / 3.0, 0.0}));
  CHECK(n[0] == Catch::Approx(1.0));
  CHECK(n[1] == Catch::Approx(0.0).margin(1e-16));

  const Box u = make_box(2, {0.0, 0.0}, {1.0, 1.0});
  CHECK(contains(u, make_point({0.5, 0.5})));
  CHECK(contains(u, make_point({1.0, 0.5})));
  CHECK_FALSE(contains(u, make_point({1.1, 0.5})));
}

TEST_CASE("coverage, multiplicity, and neighbor symmetry by sampling") {
  SplitMix64 rng(42);
  for (const int l : {2, 3, 4}) {
    const Box domain = make_box(2, {0.0, 0.0}, {1.0, 1.0});
    const auto dec = build_decomposition(domain, {l, l}, 2.0);
    for (int trial = 0; trial < 10000; ++trial) {
      const Point x = testutil::random_point_in(domain, rng);
      const auto cover = covering_subdomains(dec, x);
      REQUIRE(cover.size() >= 1);
      REQUIRE(cover.size() <= 4);  // 2^d boxes for delta = 2
    }
    for (int i = 0; i < dec.size(); ++i)
      for (int j : dec.neighbor_sets[static_cast<std::size_t>(i)]) {
        const auto& nj = dec.neighbor_sets[static_cast<std::size_t>(j)];
        CHECK(std::find(nj.begin(), nj.end(), i) != nj.end());
      }
  }
}

TEST_CASE("normalization round-trips through its inverse") {
  SplitMix64 rng(7);
  const Box b = make_box(3, {-1.0, 0.5, 2.0}, {4.0, 1.5, 2.25});
  for (int trial = 0; trial < 200; ++trial) {
    const Point x = testutil::random_point_in(b, rng);
    const Point n = normalize_to_box(b, x);
    for (int a = 0; a < 3; ++a) {
      const double back = b.center(a) + 0.5 * b.width(a) * n[static_cast<std::size_t>(a)];
      CHECK(std::abs(back - x[static_cast<std::size_t>(a)]) < 1e-14 * b.width(a));
    }
  }
}
