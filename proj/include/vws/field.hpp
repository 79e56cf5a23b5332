#ifndef VWS_FIELD_HPP
#define VWS_FIELD_HPP

// Uniform grids on the unit cube (0,1)^d, d in {1,2}, grid-sampled fields,
// the discrete gradient, midpoint quadrature and (weighted) Lebesgue norms.
//
// Node ordering is row-major with x fastest: node (i,j) -> j*(n+1)+i, cell
// (i,j) -> j*n+i. Gradient components of a cell are stored as
// value[c*d + a] for target component c and axis a.

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "vws/common.hpp"

namespace vws {

class Grid {
 public:
  Grid() = default;
  Grid(int dim, int cells_per_axis) : dim_(dim), n_(cells_per_axis) {
    require(dim == 1 || dim == 2, "grid dimension must be 1 or 2");
    require(cells_per_axis >= 2 && is_power_of_two(cells_per_axis),
            "cells per axis must be a power of two >= 2");
    h_ = 1.0 / static_cast<double>(n_);
    level_ = 0;
    while ((1 << level_) < n_) ++level_;
  }

  int dim() const { return dim_; }
  int n() const { return n_; }
  double h() const { return h_; }
  /// Dyadic level of the cells (n = 2^level).
  int level() const { return level_; }
  double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

  std::size_t nodes_per_axis() const { return static_cast<std::size_t>(n_) + 1; }
  std::size_t node_count() const {
    return dim_ == 1 ? nodes_per_axis() : nodes_per_axis() * nodes_per_axis();
  }
  std::size_t cell_count() const {
    const auto n = static_cast<std::size_t>(n_);
    return dim_ == 1 ? n : n * n;
  }

  std::size_t node_index(int i, int j = 0) const {
    return static_cast<std::size_t>(j) * nodes_per_axis() + static_cast<std::size_t>(i);
  }
  std::size_t cell_index(int i, int j = 0) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
  }
  std::array<int, 2> node_ij(std::size_t k) const {
    if (dim_ == 1) return {static_cast<int>(k), 0};
    return {static_cast<int>(k % nodes_per_axis()), static_cast<int>(k / nodes_per_axis())};
  }
  std::array<int, 2> cell_ij(std::size_t c) const {
    const auto n = static_cast<std::size_t>(n_);
    if (dim_ == 1) return {static_cast<int>(c), 0};
    return {static_cast<int>(c % n), static_cast<int>(c / n)};
  }

  Point node_point(std::size_t k) const {
    const auto ij = node_ij(k);
    return {ij[0] * h_, dim_ == 2 ? ij[1] * h_ : 0.0};
  }
  Point cell_center(std::size_t c) const {
    const auto ij = cell_ij(c);
    return {(ij[0] + 0.5) * h_, dim_ == 2 ? (ij[1] + 0.5) * h_ : 0.0};
  }
  Box cell_box(std::size_t c) const {
    const auto ij = cell_ij(c);
    Box b;
    b.dim = dim_;
    for (int a = 0; a < dim_; ++a) {
      b.lo[a] = ij[a] * h_;
      b.hi[a] = (ij[a] + 1) * h_;
    }
    return b;
  }

  bool is_boundary_node(std::size_t k) const {
    const auto ij = node_ij(k);
    for (int a = 0; a < dim_; ++a)
      if (ij[a] == 0 || ij[a] == n_) return true;
    return false;
  }

  /// Corner nodes of a cell, ordered (00, 10, 01, 11); two entries in 1D.
  int cell_nodes(std::size_t c, std::array<std::size_t, 4>& out) const {
    const auto ij = cell_ij(c);
    if (dim_ == 1) {
      out[0] = static_cast<std::size_t>(ij[0]);
      out[1] = out[0] + 1;
      return 2;
    }
    out[0] = node_index(ij[0], ij[1]);
    out[1] = out[0] + 1;
    out[2] = out[0] + nodes_per_axis();
    out[3] = out[2] + 1;
    return 4;
  }

  bool operator==(const Grid& o) const { return dim_ == o.dim_ && n_ == o.n_; }

 private:
  int dim_ = 1;
  int n_ = 2;
  double h_ = 0.5;
  int level_ = 1;
};

enum class Location : std::uint32_t { node = 0, cell = 1 };

namespace detail {
inline void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + ": non-finite entry");
}
}  // namespace detail

/// One real value per node or per cell.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(Grid grid, Location loc, std::vector<double> values)
      : grid_(grid), loc_(loc), values_(std::move(values)) {
    require(values_.size() == expected_size(), "scalar field: value count does not match grid");
    detail::check_finite(values_, "scalar field");
  }
  ScalarField(Grid grid, Location loc, double fill = 0.0)
      : ScalarField(grid, loc, std::vector<double>(size_for(grid, loc), fill)) {}

  static std::size_t size_for(const Grid& g, Location loc) {
    return loc == Location::node ? g.node_count() : g.cell_count();
  }

  const Grid& grid() const { return grid_; }
  Location location() const { return loc_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::size_t size() const { return values_.size(); }

 private:
  std::size_t expected_size() const { return size_for(grid_, loc_); }

  Grid grid_;
  Location loc_ = Location::cell;
  std::vector<double> values_;
};

/// Cell-based R^{d x N}-valued field (gradients, right-hand sides, fluxes).
class VectorField {
 public:
  VectorField() = default;
  VectorField(Grid grid, int targets, std::vector<double> values)
      : grid_(grid), targets_(targets), values_(std::move(values)) {
    require(targets >= 1, "vector field: need at least one target component");
    require(values_.size() == grid_.cell_count() * components(),
            "vector field: value count does not match grid and component count");
    detail::check_finite(values_, "vector field");
  }
  VectorField(Grid grid, int targets)
      : VectorField(grid, targets,
                    std::vector<double>(grid.cell_count() * static_cast<std::size_t>(targets * grid.dim()), 0.0)) {}

  const Grid& grid() const { return grid_; }
  int targets() const { return targets_; }
  /// Values per cell, N * d.
  std::size_t components() const { return static_cast<std::size_t>(targets_ * grid_.dim()); }
  std::size_t cell_count() const { return grid_.cell_count(); }

  std::span<const double> cell(std::size_t c) const {
    return {values_.data() + c * components(), components()};
  }
  std::span<double> cell(std::size_t c) { return {values_.data() + c * components(), components()}; }
  double magnitude(std::size_t c) const { return frobenius(cell(c)); }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  Grid grid_;
  int targets_ = 1;
  std::vector<double> values_;
};

/// Nodal R^N-valued function, the discrete W^{1,p}; optionally with zero trace.
class SobolevFunction {
 public:
  SobolevFunction() = default;
  SobolevFunction(Grid grid, int targets, std::vector<double> values, bool zero_trace)
      : grid_(grid), targets_(targets), values_(std::move(values)), zero_trace_(zero_trace) {
    require(targets >= 1, "sobolev function: need at least one target component");
    require(values_.size() == grid_.node_count() * static_cast<std::size_t>(targets),
            "sobolev function: value count does not match grid");
    detail::check_finite(values_, "sobolev function");
    if (zero_trace_) require(trace_is_zero(), "sobolev function: nonzero boundary values with zero-trace flag set");
  }
  SobolevFunction(Grid grid, int targets)
      : SobolevFunction(grid, targets, std::vector<double>(grid.node_count() * static_cast<std::size_t>(targets), 0.0),
                        true) {}

  /// Samples `fn(x, component)` at the nodes; with `zero_trace` the boundary
  /// nodes are set to exactly 0.
  static SobolevFunction sample(Grid grid, int targets, const std::function<double(const Point&, int)>& fn,
                                bool zero_trace) {
    std::vector<double> v(grid.node_count() * static_cast<std::size_t>(targets));
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      const bool bdry = grid.is_boundary_node(k);
      for (int c = 0; c < targets; ++c)
        v[k * targets + c] = (zero_trace && bdry) ? 0.0 : fn(grid.node_point(k), c);
    }
    return SobolevFunction(grid, targets, std::move(v), zero_trace);
  }

  const Grid& grid() const { return grid_; }
  int targets() const { return targets_; }
  bool zero_trace() const { return zero_trace_; }
  double at(std::size_t node, int comp) const { return values_[node * targets_ + comp]; }
  double& at(std::size_t node, int comp) { return values_[node * targets_ + comp]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool trace_is_zero() const {
    for (std::size_t k = 0; k < grid_.node_count(); ++k)
      if (grid_.is_boundary_node(k))
        for (int c = 0; c < targets_; ++c)
          if (values_[k * targets_ + c] != 0.0) return false;
    return true;
  }

 private:
  Grid grid_;
  int targets_ = 1;
  std::vector<double> values_;
  bool zero_trace_ = true;
};

struct MuckenhouptEstimate {
  double p = 2.0;
  double value = 1.0;
  /// Cube family the supremum was taken over ("grid-aligned" or "dyadic").
  std::string family;
  /// Cube (or cell, for p = 1) attaining the maximum.
  Box argmax;
};

/// Strictly positive cell-based weight with its construction descriptor.
class Weight {
 public:
  Weight() = default;
  Weight(Grid grid, std::vector<double> values, std::string descriptor)
      : grid_(grid), values_(std::move(values)), descriptor_(std::move(descriptor)) {
    require(values_.size() == grid_.cell_count(), "weight: value count does not match grid cells");
    for (double w : values_)
      if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("weight: values must be finite and > 0");
  }
  static Weight unit(Grid grid) { return Weight(grid, std::vector<double>(grid.cell_count(), 1.0), "1"); }

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t c) const { return values_[c]; }
  const std::string& descriptor() const { return descriptor_; }
  const std::optional<MuckenhouptEstimate>& muckenhoupt() const { return ap_; }
  void set_muckenhoupt(MuckenhouptEstimate est) { ap_ = std::move(est); }

 private:
  Grid grid_;
  std::vector<double> values_;
  std::string descriptor_;
  std::optional<MuckenhouptEstimate> ap_;
};

// ---------------------------------------------------------------------------
// Discrete differential operators.

/// Cell gradient of the nodal interpolant. In 2D this is the gradient of the
/// bilinear interpolant at the cell center (averaged forward differences).
inline VectorField gradient(const SobolevFunction& u) {
  const Grid& g = u.grid();
  const int N = u.targets();
  const int d = g.dim();
  const double inv_h = 1.0 / g.h();
  VectorField out(g, N);
  std::array<std::size_t, 4> nd{};
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    g.cell_nodes(c, nd);
    auto z = out.cell(c);
    for (int k = 0; k < N; ++k) {
      if (d == 1) {
        z[k] = (u.at(nd[1], k) - u.at(nd[0], k)) * inv_h;
      } else {
        const double u00 = u.at(nd[0], k), u10 = u.at(nd[1], k);
        const double u01 = u.at(nd[2], k), u11 = u.at(nd[3], k);
        z[k * 2 + 0] = 0.5 * ((u10 - u00) + (u11 - u01)) * inv_h;
        z[k * 2 + 1] = 0.5 * ((u01 - u00) + (u11 - u10)) * inv_h;
      }
    }
  }
  return out;
}

/// Adjoint of `gradient` with respect to the plain Euclidean pairings:
/// returns r with r . u = sum_c w_c . (grad u)_c for every nodal u.
inline std::vector<double> gradient_transpose(const Grid& g, int targets, std::span<const double> cell_values) {
  const int d = g.dim();
  const std::size_t comps = static_cast<std::size_t>(targets * d);
  std::vector<double> r(g.node_count() * static_cast<std::size_t>(targets), 0.0);
  const double inv_h = 1.0 / g.h();
  std::array<std::size_t, 4> nd{};
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    g.cell_nodes(c, nd);
    const double* w = cell_values.data() + c * comps;
    for (int k = 0; k < targets; ++k) {
      if (d == 1) {
        r[nd[0] * targets + k] -= w[k] * inv_h;
        r[nd[1] * targets + k] += w[k] * inv_h;
      } else {
        const double wx = 0.5 * w[k * 2] * inv_h, wy = 0.5 * w[k * 2 + 1] * inv_h;
        r[nd[0] * targets + k] += -wx - wy;
        r[nd[1] * targets + k] += wx - wy;
        r[nd[2] * targets + k] += -wx + wy;
        r[nd[3] * targets + k] += wx + wy;
      }
    }
  }
  return r;
}

/// Value of the nodal (multi)linear interpolant of component `comp` at x.
/// Points outside the closed unit cube evaluate to 0 (extension by zero).
inline double interpolate(const SobolevFunction& u, const Point& x, int comp) {
  const Grid& g = u.grid();
  const int n = g.n();
  std::array<int, 2> i{0, 0};
  std::array<double, 2> t{0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) {
    if (x[a] < 0.0 || x[a] > 1.0) return 0.0;
    const double s = x[a] * n;
    i[a] = std::min(static_cast<int>(std::floor(s)), n - 1);
    t[a] = s - i[a];
  }
  if (g.dim() == 1) {
    return (1.0 - t[0]) * u.at(g.node_index(i[0]), comp) + t[0] * u.at(g.node_index(i[0] + 1), comp);
  }
  const double u00 = u.at(g.node_index(i[0], i[1]), comp);
  const double u10 = u.at(g.node_index(i[0] + 1, i[1]), comp);
  const double u01 = u.at(g.node_index(i[0], i[1] + 1), comp);
  const double u11 = u.at(g.node_index(i[0] + 1, i[1] + 1), comp);
  return (1.0 - t[1]) * ((1.0 - t[0]) * u00 + t[0] * u10) + t[1] * ((1.0 - t[0]) * u01 + t[0] * u11);
}

/// Range of cell indices along one axis whose closed cells meet [lo, hi],
/// clipped to the grid. Empty (first > second) when disjoint from [0,1].
inline std::pair<int, int> cell_range(const Grid& g, double lo, double hi) {
  const int n = g.n();
  if (hi < 0.0 || lo > 1.0) return {1, 0};
  int a = static_cast<int>(std::floor(lo * n));
  int b = static_cast<int>(std::ceil(hi * n)) - 1;
  a = std::clamp(a, 0, n - 1);
  b = std::clamp(b, 0, n - 1);
  return {a, b};
}

/// Exact integral of the nodal interpolant of component `comp` over `box`,
/// with u extended by zero outside the unit cube.
inline double integrate_interpolant(const SobolevFunction& u, const Box& box, int comp) {
  const Grid& g = u.grid();
  const double h = g.h();
  auto [ix0, ix1] = cell_range(g, box.lo[0], box.hi[0]);
  auto [iy0, iy1] = g.dim() == 2 ? cell_range(g, box.lo[1], box.hi[1]) : std::pair<int, int>{0, 0};
  // Moments of (1-t) and t over [t0,t1].
  auto moments = [](double t0, double t1) {
    const double m1 = 0.5 * (t1 * t1 - t0 * t0);
    return std::pair<double, double>{(t1 - t0) - m1, m1};
  };
  std::vector<double> terms;
  for (int j = iy0; j <= iy1; ++j) {
    for (int i = ix0; i <= ix1; ++i) {
      const double x0 = std::max(box.lo[0], i * h), x1 = std::min(box.hi[0], (i + 1) * h);
      if (x1 <= x0) continue;
      auto [ax0, ax1] = moments(x0 / h - i, x1 / h - i);
      if (g.dim() == 1) {
        terms.push_back(h * (ax0 * u.at(g.node_index(i), comp) + ax1 * u.at(g.node_index(i + 1), comp)));
        continue;
      }
      const double y0 = std::max(box.lo[1], j * h), y1 = std::min(box.hi[1], (j + 1) * h);
      if (y1 <= y0) continue;
      auto [ay0, ay1] = moments(y0 / h - j, y1 / h - j);
      const double v = ax0 * ay0 * u.at(g.node_index(i, j), comp) + ax1 * ay0 * u.at(g.node_index(i + 1, j), comp) +
                       ax0 * ay1 * u.at(g.node_index(i, j + 1), comp) +
                       ax1 * ay1 * u.at(g.node_index(i + 1, j + 1), comp);
      terms.push_back(h * h * v);
    }
  }
  return pairwise_sum(terms);
}

/// Measure of (closed cell c) intersected with `box`.
inline double cell_overlap(const Grid& g, std::size_t c, const Box& box) {
  return g.cell_box(c).intersect(box).measure();
}

// ---------------------------------------------------------------------------
// Quadrature.

/// sum_c h^d term(c) with pairwise summation; a non-finite term is an error.
template <class Term>
double integrate_cells(const Grid& g, Term&& term) {
  std::vector<double> t(g.cell_count());
  const double vol = g.cell_volume();
  for (std::size_t c = 0; c < t.size(); ++c) {
    const double v = term(c);
    if (!std::isfinite(v)) throw NumericalError("integrate: non-finite integrand value (corrupted field?)");
    t[c] = vol * v;
  }
  return pairwise_sum(t);
}

/// Midpoint rule for a cell-based field; `integrand` receives the cell's values.
template <class Integrand>
double integrate(const VectorField& f, Integrand&& integrand) {
  return integrate_cells(f.grid(), [&](std::size_t c) { return integrand(f.cell(c)); });
}

/// Midpoint rule; node-based fields are averaged to cell centers first.
template <class Integrand>
double integrate(const ScalarField& f, Integrand&& integrand) {
  const Grid& g = f.grid();
  if (f.location() == Location::cell) {
    return integrate_cells(g, [&](std::size_t c) {
      const double v = f[c];
      return integrand(std::span<const double>(&v, 1));
    });
  }
  std::array<std::size_t, 4> nd{};
  return integrate_cells(g, [&](std::size_t c) {
    const int m = g.cell_nodes(c, nd);
    double v = 0.0;
    for (int k = 0; k < m; ++k) v += f[nd[k]];
    v /= m;
    return integrand(std::span<const double>(&v, 1));
  });
}

/// Midpoint rule for nodal functions, averaging the N components to cell centers.
template <class Integrand>
double integrate(const SobolevFunction& u, Integrand&& integrand) {
  const Grid& g = u.grid();
  const int N = u.targets();
  std::array<std::size_t, 4> nd{};
  std::vector<double> avg(static_cast<std::size_t>(N));
  return integrate_cells(g, [&](std::size_t c) {
    const int m = g.cell_nodes(c, nd);
    for (int k = 0; k < N; ++k) {
      double v = 0.0;
      for (int j = 0; j < m; ++j) v += u.at(nd[j], k);
      avg[k] = v / m;
    }
    return integrand(std::span<const double>(avg));
  });
}

/// (int |g|^p)^{1/p} with |.| the Frobenius norm.
inline double lp_norm(const VectorField& g, double p) {
  require(p >= 1.0, "lp_norm: p must be >= 1");
  return std::pow(integrate_cells(g.grid(), [&](std::size_t c) { return std::pow(g.magnitude(c), p); }), 1.0 / p);
}

/// (int |g|^p w)^{1/p}. With w == 1 this is bit-identical to lp_norm.
inline double weighted_norm(const VectorField& g, const Weight& w, double p) {
  require(p >= 1.0, "weighted_norm: p must be >= 1");
  require(g.grid() == w.grid(), "weighted_norm: grid mismatch");
  return std::pow(
      integrate_cells(g.grid(), [&](std::size_t c) { return std::pow(g.magnitude(c), p) * w[c]; }), 1.0 / p);
}

/// Same as above for raw cell weights; rejects non-positive entries.
inline double weighted_norm(const VectorField& g, std::span<const double> w, double p) {
  require(w.size() == g.cell_count(), "weighted_norm: weight size mismatch");
  for (double x : w)
    if (!(x > 0.0)) throw InvalidArgument("weighted_norm: weight must be strictly positive (not a weight)");
  return std::pow(
      integrate_cells(g.grid(), [&](std::size_t c) { return std::pow(g.magnitude(c), p) * w[c]; }), 1.0 / p);
}

/// L^p norm of a nodal function using cell-center averages.
inline double lp_norm(const SobolevFunction& u, double p) {
  return std::pow(integrate(u, [&](std::span<const double> v) { return std::pow(frobenius(v), p); }), 1.0 / p);
}

/// Cellwise Frobenius magnitudes of a vector field.
inline ScalarField magnitude(const VectorField& f) {
  std::vector<double> v(f.cell_count());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = f.magnitude(c);
  return ScalarField(f.grid(), Location::cell, std::move(v));
}

/// Samples `fn(x, out)` at cell centers; `out` has N*d entries.
inline VectorField sample_cells(Grid grid, int targets,
                                const std::function<void(const Point&, std::span<double>)>& fn) {
  VectorField f(grid, targets);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) fn(grid.cell_center(c), f.cell(c));
  detail::check_finite(f.values(), "sampled vector field");
  return f;
}

inline SobolevFunction operator-(const SobolevFunction& a, const SobolevFunction& b) {
  require(a.grid() == b.grid() && a.targets() == b.targets(), "sobolev difference: shape mismatch");
  std::vector<double> v(a.values().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  return SobolevFunction(a.grid(), a.targets(), std::move(v), a.zero_trace() && b.zero_trace());
}

}  // namespace vws

#endif  // VWS_FIELD_HPP
