#ifndef VWS_TRUNCATION_HPP
#define VWS_TRUNCATION_HPP

// Relative truncation u -> u_O on an open set O, the cube averages it is
// built from, and the diagnostics behind its stability estimate.
//
// All integrals here are taken over the nodal (multi)linear interpolant of
// u, extended by zero outside the unit cube, with 3-point Gauss quadrature
// on each cell piece. Gradient integrals therefore see the full bilinear
// gradient, not only its cell-center value.

#include <limits>
#include <ostream>

#include "vws/whitney.hpp"

namespace vws {

namespace detail {

inline constexpr std::array<double, 3> kGaussX{-0.7745966692414834, 0.0, 0.7745966692414834};
inline constexpr std::array<double, 3> kGaussW{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

/// Calls fn(cell i, j, piece box) for every positive-measure piece of
/// box intersected with the closed cells of the grid.
template <class Fn>
void for_each_cell_piece(const Grid& g, const Box& box, Fn&& fn) {
  const double h = g.h();
  auto [ix0, ix1] = cell_range(g, box.lo[0], box.hi[0]);
  auto [iy0, iy1] = g.dim() == 2 ? cell_range(g, box.lo[1], box.hi[1]) : std::pair<int, int>{0, 0};
  for (int j = iy0; j <= iy1; ++j)
    for (int i = ix0; i <= ix1; ++i) {
      Box piece;
      piece.dim = g.dim();
      piece.lo[0] = std::max(box.lo[0], i * h);
      piece.hi[0] = std::min(box.hi[0], (i + 1) * h);
      if (piece.hi[0] <= piece.lo[0]) continue;
      if (g.dim() == 2) {
        piece.lo[1] = std::max(box.lo[1], j * h);
        piece.hi[1] = std::min(box.hi[1], (j + 1) * h);
        if (piece.hi[1] <= piece.lo[1]) continue;
      }
      fn(i, j, piece);
    }
}

/// Gauss quadrature of fn(s, t) over a cell piece, (s, t) local coordinates in [0,1].
template <class Fn>
double gauss_piece(const Grid& g, int i, int j, const Box& piece, Fn&& fn) {
  const double h = g.h();
  const double s0 = piece.lo[0] / h - i, s1 = piece.hi[0] / h - i;
  double total = 0.0;
  if (g.dim() == 1) {
    for (int a = 0; a < 3; ++a) {
      const double s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * kGaussX[a];
      total += kGaussW[a] * fn(s, 0.0);
    }
    return 0.5 * piece.extent(0) * total;
  }
  const double t0 = piece.lo[1] / h - j, t1 = piece.hi[1] / h - j;
  for (int b = 0; b < 3; ++b) {
    const double t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * kGaussX[b];
    for (int a = 0; a < 3; ++a) {
      const double s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * kGaussX[a];
      total += kGaussW[a] * kGaussW[b] * fn(s, t);
    }
  }
  return 0.25 * piece.extent(0) * piece.extent(1) * total;
}

/// Corner values of component k on cell (i, j): (00, 10, 01, 11).
inline std::array<double, 4> corners(const SobolevFunction& u, int i, int j, int k) {
  const Grid& g = u.grid();
  if (g.dim() == 1) return {u.at(g.node_index(i), k), u.at(g.node_index(i + 1), k), 0.0, 0.0};
  return {u.at(g.node_index(i, j), k), u.at(g.node_index(i + 1, j), k), u.at(g.node_index(i, j + 1), k),
          u.at(g.node_index(i + 1, j + 1), k)};
}

}  // namespace detail

/// int over box of |grad I u|^p (Frobenius), u extended by zero outside
/// the unit cube (its gradient vanishes there).
inline double gradient_power_integral(const SobolevFunction& u, const Box& box, double p) {
  const Grid& g = u.grid();
  const int N = u.targets();
  const double inv_h = 1.0 / g.h();
  std::vector<double> terms;
  std::vector<std::array<double, 4>> cs(static_cast<std::size_t>(N));
  detail::for_each_cell_piece(g, box, [&](int i, int j, const Box& piece) {
    for (int k = 0; k < N; ++k) cs[k] = detail::corners(u, i, j, k);
    terms.push_back(detail::gauss_piece(g, i, j, piece, [&](double s, double t) {
      double sq = 0.0;
      for (int k = 0; k < N; ++k) {
        const auto& c = cs[k];
        if (g.dim() == 1) {
          const double gx = (c[1] - c[0]) * inv_h;
          sq += gx * gx;
        } else {
          const double gx = ((1.0 - t) * (c[1] - c[0]) + t * (c[3] - c[2])) * inv_h;
          const double gy = ((1.0 - s) * (c[2] - c[0]) + s * (c[3] - c[1])) * inv_h;
          sq += gx * gx + gy * gy;
        }
      }
      return p == 2.0 ? sq : std::pow(std::sqrt(sq), p);
    }));
  });
  return pairwise_sum(terms);
}

/// int over box of |I u - shift|^p, u extended by zero outside the unit cube.
inline double deviation_power_integral(const SobolevFunction& u, const Box& box, std::span<const double> shift,
                                       double p) {
  const Grid& g = u.grid();
  const int N = u.targets();
  std::vector<double> terms;
  std::vector<std::array<double, 4>> cs(static_cast<std::size_t>(N));
  detail::for_each_cell_piece(g, box, [&](int i, int j, const Box& piece) {
    for (int k = 0; k < N; ++k) cs[k] = detail::corners(u, i, j, k);
    terms.push_back(detail::gauss_piece(g, i, j, piece, [&](double s, double t) {
      double sq = 0.0;
      for (int k = 0; k < N; ++k) {
        const auto& c = cs[k];
        const double v = g.dim() == 1 ? (1.0 - s) * c[0] + s * c[1]
                                      : (1.0 - t) * ((1.0 - s) * c[0] + s * c[1]) + t * ((1.0 - s) * c[2] + s * c[3]);
        sq += (v - shift[k]) * (v - shift[k]);
      }
      return std::pow(std::sqrt(sq), p);
    }));
  });
  // Outside the unit cube I u = 0.
  const Box inside = box.intersect(unit_box(g.dim()));
  const double outside = box.measure() - inside.measure();
  if (outside > 0.0) terms.push_back(outside * std::pow(frobenius(shift), p));
  return pairwise_sum(terms);
}

/// Whether the closed cube alpha*Q lies inside the open unit cube.
inline bool enlarged_inside_domain(const DyadicCube& q, double alpha) {
  const Box b = q.enlarged(alpha);
  for (int a = 0; a < q.dim; ++a)
    if (!(b.lo[a] > 0.0 && b.hi[a] < 1.0)) return false;
  return true;
}

/// Mean of I u over 9/8 Q when 9/8 Q lies in the domain, else 0.
inline std::vector<double> cube_average(const SobolevFunction& u, const DyadicCube& q) {
  std::vector<double> avg(static_cast<std::size_t>(u.targets()), 0.0);
  if (!enlarged_inside_domain(q, 1.125)) return avg;
  const Box b = q.enlarged(1.125);
  for (int k = 0; k < u.targets(); ++k) avg[k] = integrate_interpolant(u, b, k) / b.measure();
  return avg;
}

struct CubeAverages {
  int targets = 1;
  /// targets values per cube.
  std::vector<double> values;
  std::vector<bool> contained;

  std::size_t size() const { return contained.size(); }
  std::span<const double> of(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(targets), static_cast<std::size_t>(targets)};
  }
};

inline CubeAverages cube_averages(const SobolevFunction& u, const WhitneyCover& cover) {
  require(u.grid().dim() == cover.dim(), "cube averages: dimension mismatch");
  CubeAverages out;
  out.targets = u.targets();
  out.values.reserve(cover.size() * static_cast<std::size_t>(u.targets()));
  for (const auto& q : cover.cubes()) {
    out.contained.push_back(enlarged_inside_domain(q, 1.125));
    const auto avg = cube_average(u, q);
    out.values.insert(out.values.end(), avg.begin(), avg.end());
  }
  return out;
}

/// u_O: u off O, sum_i psi_i ubar_i on O, and 0 when O is the whole space.
///
/// A node in O that lies in no 9/8 Q_i (only possible next to the max_level
/// frontier of a truncated cover) keeps its value u(x).
inline SobolevFunction relative_truncate(const SobolevFunction& u, const OpenSetMask& mask, const WhitneyCover& cover,
                                         const PartitionOfUnity& pou) {
  require(u.zero_trace(), "relative truncation: u must have zero boundary trace");
  const Grid& g = u.grid();
  const int N = u.targets();
  if (mask.is_whole_space()) return SobolevFunction(g, N);
  require(&pou.cover() == &cover, "relative truncation: partition of unity built from a different cover");
  const CubeAverages avg = cube_averages(u, cover);
  std::vector<double> v = u.values();
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const Point x = g.node_point(k);
    if (!mask.contains(x)) continue;
    const auto weights = pou.evaluate(x);
    if (weights.empty()) continue;
    for (int c = 0; c < N; ++c) {
      double s = 0.0;
      for (auto [i, w] : weights) s += w * avg.of(i)[c];
      v[k * N + c] = s;
    }
  }
  // Nodes on the boundary only see cubes with 9/8 Q leaving the domain, whose
  // averages are 0; this pins the trace against rounding.
  for (std::size_t k = 0; k < g.node_count(); ++k)
    if (g.is_boundary_node(k))
      for (int c = 0; c < N; ++c) v[k * N + c] = 0.0;
  return SobolevFunction(g, N, std::move(v), true);
}

/// Builds cover and partition of unity for the mask, then truncates.
inline SobolevFunction relative_truncate(const SobolevFunction& u, const OpenSetMask& mask, int max_level) {
  if (mask.is_whole_space()) return SobolevFunction(u.grid(), u.targets());
  if (mask.is_empty()) return u;
  const WhitneyCover cover = whitney_decompose(mask, max_level);
  if (cover.empty()) return u;
  const PartitionOfUnity pou(cover);
  return relative_truncate(u, mask, cover, pou);
}

struct PoincareRatio {
  double lhs = 0.0;  // mean over 9/8 Q of |(u - ubar_i) / diam Q|^p
  double rhs = 0.0;  // mean over alpha Q of |grad u|^p
  double ratio = 0.0;
};

/// Both sides of the cube Poincare estimate and their quotient.
inline PoincareRatio poincare_ratio(const SobolevFunction& u, const DyadicCube& q, double p, double enlargement = 1.5) {
  require(p >= 1.0, "poincare ratio: p must be >= 1");
  require(enlargement >= 1.125, "poincare ratio: gradient enlargement must contain 9/8 Q");
  const auto ubar = cube_average(u, q);
  const Box inner = q.enlarged(1.125);
  const Box outer = q.enlarged(enlargement);
  PoincareRatio r;
  r.lhs = deviation_power_integral(u, inner, ubar, p) / inner.measure() / std::pow(q.diameter(), p);
  r.rhs = gradient_power_integral(u, outer, p) / outer.measure();
  if (r.rhs > 0.0) {
    r.ratio = r.lhs / r.rhs;
    return r;
  }
  double umax = 0.0;
  for (double v : u.values()) umax = std::max(umax, std::abs(v));
  const double noise = std::pow(1e-12 * umax / q.diameter(), p);
  if (r.lhs > noise) throw NumericalError("poincare ratio: positive deviation with vanishing gradient");
  r.ratio = 0.0;
  return r;
}

struct NeighborJump {
  double jump = 0.0;  // |ubar_j - ubar_i| / diam Q_i
  double rhs = 0.0;   // mean |grad u| over 3/2 Q_i plus over 3/2 Q_j
  double ratio = 0.0;
};

inline NeighborJump neighbor_jump(const SobolevFunction& u, const WhitneyCover& cover, std::size_t i, std::size_t j) {
  const auto& nb = neighbors(cover, i);
  if (!std::binary_search(nb.begin(), nb.end(), j))
    throw InvalidArgument("neighbor jump: cube " + std::to_string(j) + " is not a neighbor of cube " + std::to_string(i));
  const DyadicCube& qi = cover.cube(i);
  const DyadicCube& qj = cover.cube(j);
  const auto ai = cube_average(u, qi), aj = cube_average(u, qj);
  double sq = 0.0;
  for (std::size_t k = 0; k < ai.size(); ++k) sq += (aj[k] - ai[k]) * (aj[k] - ai[k]);
  NeighborJump r;
  r.jump = std::sqrt(sq) / qi.diameter();
  const Box bi = qi.enlarged(1.5), bj = qj.enlarged(1.5);
  r.rhs = gradient_power_integral(u, bi, 1.0) / bi.measure() + gradient_power_integral(u, bj, 1.0) / bj.measure();
  r.ratio = r.rhs > 0.0 ? r.jump / r.rhs : 0.0;
  return r;
}

struct StabilityRatio {
  double lhs = 0.0;  // int over the domain of |grad (u - u_O)|^p
  double rhs = 0.0;  // int over O and the domain of |grad u|^p
  double ratio = 0.0;
};

/// Both sides of the truncation stability estimate. The integral over O is
/// the sum over the (interior-disjoint) cubes of the cover.
inline StabilityRatio stability_ratio(const SobolevFunction& u, const SobolevFunction& u_o, const WhitneyCover& cover,
                                      double p) {
  StabilityRatio r;
  const int d = u.grid().dim();
  r.lhs = gradient_power_integral(u - u_o, unit_box(d), p);
  std::vector<double> parts;
  parts.reserve(cover.size());
  for (const auto& q : cover.cubes()) parts.push_back(gradient_power_integral(u, q.box(), p));
  r.rhs = pairwise_sum(parts);
  if (r.rhs > 0.0)
    r.ratio = r.lhs / r.rhs;
  else
    r.ratio = r.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return r;
}

/// Per-cube rows: i, level, ubar components, contained flag, cube Poincare ratio.
inline void write_cube_diagnostics(std::ostream& os, const SobolevFunction& u, const WhitneyCover& cover, double p) {
  const CubeAverages avg = cube_averages(u, cover);
  os << "i,level";
  for (int c = 0; c < u.targets(); ++c) os << ",ubar" << c;
  os << ",contained,poincare_ratio\n";
  for (std::size_t i = 0; i < cover.size(); ++i) {
    os << i << ',' << cover.cube(i).level;
    for (double v : avg.of(i)) os << ',' << v;
    os << ',' << (avg.contained[i] ? 1 : 0) << ',' << poincare_ratio(u, cover.cube(i), p).ratio << '\n';
  }
}

/// Per-pair rows: i, j, neighbor jump ratio (each unordered pair once).
inline void write_pair_diagnostics(std::ostream& os, const SobolevFunction& u, const WhitneyCover& cover) {
  os << "i,j,jump_ratio\n";
  for (std::size_t i = 0; i < cover.size(); ++i)
    for (std::size_t j : cover.neighbors(i))
      if (j > i) os << i << ',' << j << ',' << neighbor_jump(u, cover, i, j).ratio << '\n';
}

}  // namespace vws

#endif  // VWS_TRUNCATION_HPP
