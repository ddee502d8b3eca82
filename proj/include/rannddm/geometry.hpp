#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rannddm {

/// Maximum spatial (or space-time) dimension supported by the library.
inline constexpr int kMaxDim = 4;

/// A point in R^d, d <= kMaxDim. Entries past the active dimension are zero.
using Point = std::array<double, kMaxDim>;

inline Point make_point(std::initializer_list<double> coords) {
  Point p{};
  int i = 0;
  for (double c : coords) p[static_cast<std::size_t>(i++)] = c;
  return p;
}

/// Axis-aligned box with per-axis bounds. lo[i] < hi[i] on every active axis.
struct Box {
  int dim = 0;
  Point lo{};
  Point hi{};

  double width(int axis) const { return hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]; }
  double center(int axis) const { return 0.5 * (lo[static_cast<std::size_t>(axis)] + hi[static_cast<std::size_t>(axis)]); }
};

inline Box make_box(int dim, std::initializer_list<double> lo, std::initializer_list<double> hi) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("box dimension must be in [1,4]");
  Box b;
  b.dim = dim;
  int i = 0;
  for (double v : lo) b.lo[static_cast<std::size_t>(i++)] = v;
  i = 0;
  for (double v : hi) b.hi[static_cast<std::size_t>(i++)] = v;
  for (int a = 0; a < dim; ++a) {
    if (!(b.lo[static_cast<std::size_t>(a)] < b.hi[static_cast<std::size_t>(a)]))
      throw std::invalid_argument("degenerate box: lo must be strictly below hi on axis " + std::to_string(a));
  }
  return b;
}

/// Closed-box membership test.
inline bool contains(const Box& box, const Point& x) {
  for (int a = 0; a < box.dim; ++a) {
    const auto i = static_cast<std::size_t>(a);
    if (x[i] < box.lo[i] || x[i] > box.hi[i]) return false;
  }
  return true;
}

/// Maps x into the box-local frame [-1,1]^d: x_hat_i = 2 (x_i - c_i) / w_i.
/// Works for points outside the box as well (plain affine map).
inline Point normalize_to_box(const Box& box, const Point& x) {
  Point out{};
  for (int a = 0; a < box.dim; ++a) {
    const auto i = static_cast<std::size_t>(a);
    out[i] = 2.0 * (x[i] - box.center(a)) / box.width(a);
  }
  return out;
}

/// Per-axis derivative of the normalization map, d(x_hat_i)/d(x_i) = 2 / w_i.
inline Point normalize_scales(const Box& box) {
  Point s{};
  for (int a = 0; a < box.dim; ++a) s[static_cast<std::size_t>(a)] = 2.0 / box.width(a);
  return s;
}

/// Overlapping Cartesian decomposition of a box domain.
///
/// Along an axis split into l >= 2 parts with overlap ratio delta, subdomain
/// centers sit at the normalized coordinates (j-1)/(l-1) with half-width
/// (delta/2)/(l-1), both mapped affinely onto the axis extent. An axis with
/// l = 1 keeps a single part spanning the full extent. Subdomain boxes may
/// poke out of the domain; they are never clipped.
struct CartesianDecomposition {
  Box domain;
  std::vector<int> per_axis_counts;
  double overlap_ratio = 0.0;
  std::vector<Box> subdomains;
  std::vector<Point> centers;
  std::vector<Point> half_widths;
  std::vector<std::vector<int>> neighbor_sets;

  int size() const { return static_cast<int>(subdomains.size()); }
  int dim() const { return domain.dim; }
};

namespace detail {

inline bool interiors_intersect(const Box& a, const Box& b) {
  for (int ax = 0; ax < a.dim; ++ax) {
    const auto i = static_cast<std::size_t>(ax);
    if (!(std::max(a.lo[i], b.lo[i]) < std::min(a.hi[i], b.hi[i]))) return false;
  }
  return true;
}

}  // namespace detail

inline CartesianDecomposition build_decomposition(const Box& domain, const std::vector<int>& per_axis_counts,
                                                  double delta) {
  if (static_cast<int>(per_axis_counts.size()) != domain.dim)
    throw std::invalid_argument("per-axis counts must match the domain dimension");
  if (!(delta > 1.0)) throw std::invalid_argument("overlap ratio delta must exceed 1");
  for (int c : per_axis_counts)
    if (c < 1) throw std::invalid_argument("per-axis subdomain counts must be >= 1");

  const int d = domain.dim;
  CartesianDecomposition dec;
  dec.domain = domain;
  dec.per_axis_counts = per_axis_counts;
  dec.overlap_ratio = delta;

  // Per-axis centers and half-widths in true coordinates.
  std::vector<std::vector<double>> axis_centers(static_cast<std::size_t>(d));
  std::vector<double> axis_half(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    const auto ia = static_cast<std::size_t>(a);
    const int l = per_axis_counts[ia];
    const double lo = domain.lo[ia], len = domain.width(a);
    if (l == 1) {
      axis_centers[ia] = {lo + 0.5 * len};
      axis_half[ia] = 0.5 * len;
    } else {
      axis_half[ia] = (delta / 2.0) / static_cast<double>(l - 1) * len;
      for (int j = 0; j < l; ++j)
        axis_centers[ia].push_back(lo + static_cast<double>(j) / static_cast<double>(l - 1) * len);
    }
  }

  int total = 1;
  for (int c : per_axis_counts) total *= c;
  dec.subdomains.reserve(static_cast<std::size_t>(total));
  dec.centers.reserve(static_cast<std::size_t>(total));
  dec.half_widths.reserve(static_cast<std::size_t>(total));

  // Flat index: axis 0 slowest, last axis fastest.
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (int flat = 0; flat < total; ++flat) {
    Box sub;
    sub.dim = d;
    Point c{}, h{};
    for (int a = 0; a < d; ++a) {
      const auto ia = static_cast<std::size_t>(a);
      c[ia] = axis_centers[ia][static_cast<std::size_t>(idx[ia])];
      h[ia] = axis_half[ia];
      sub.lo[ia] = c[ia] - h[ia];
      sub.hi[ia] = c[ia] + h[ia];
    }
    dec.subdomains.push_back(sub);
    dec.centers.push_back(c);
    dec.half_widths.push_back(h);
    for (int a = d - 1; a >= 0; --a) {
      const auto ia = static_cast<std::size_t>(a);
      if (++idx[ia] < per_axis_counts[ia]) break;
      idx[ia] = 0;
    }
  }

  dec.neighbor_sets.assign(static_cast<std::size_t>(total), {});
  for (int i = 0; i < total; ++i)
    for (int j = 0; j < total; ++j)
      if (detail::interiors_intersect(dec.subdomains[static_cast<std::size_t>(i)],
                                      dec.subdomains[static_cast<std::size_t>(j)]))
        dec.neighbor_sets[static_cast<std::size_t>(i)].push_back(j);

  return dec;
}

/// Indices of all subdomain boxes whose closure contains x.
inline std::vector<int> covering_subdomains(const CartesianDecomposition& dec, const Point& x) {
  std::vector<int> out;
  for (int j = 0; j < dec.size(); ++j)
    if (contains(dec.subdomains[static_cast<std::size_t>(j)], x)) out.push_back(j);
  return out;
}

enum class PointKind { collocation, test };

struct PointSet {
  int dim = 0;
  PointKind kind = PointKind::collocation;
  std::vector<int> per_axis_resolutions;
  std::vector<Point> points;

  int size() const { return static_cast<int>(points.size()); }
};

/// Cell-centered uniform grid: along axis i with resolution r the coordinates
/// are lo_i + (k + 0.5) (hi_i - lo_i) / r, so no point touches the boundary.
inline PointSet uniform_grid(const Box& domain, const std::vector<int>& per_axis_resolutions, PointKind kind) {
  if (static_cast<int>(per_axis_resolutions.size()) != domain.dim)
    throw std::invalid_argument("per-axis resolutions must match the domain dimension");
  for (int r : per_axis_resolutions)
    if (r < 1) throw std::invalid_argument("grid resolutions must be >= 1");

  const int d = domain.dim;
  PointSet ps;
  ps.dim = d;
  ps.kind = kind;
  ps.per_axis_resolutions = per_axis_resolutions;

  int total = 1;
  for (int r : per_axis_resolutions) total *= r;
  ps.points.reserve(static_cast<std::size_t>(total));

  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (int flat = 0; flat < total; ++flat) {
    Point p{};
    for (int a = 0; a < d; ++a) {
      const auto ia = static_cast<std::size_t>(a);
      const double step = domain.width(a) / static_cast<double>(per_axis_resolutions[ia]);
      p[ia] = domain.lo[ia] + (static_cast<double>(idx[ia]) + 0.5) * step;
    }
    ps.points.push_back(p);
    for (int a = d - 1; a >= 0; --a) {
      const auto ia = static_cast<std::size_t>(a);
      if (++idx[ia] < per_axis_resolutions[ia]) break;
      idx[ia] = 0;
    }
  }
  return ps;
}

}  // namespace rannddm
