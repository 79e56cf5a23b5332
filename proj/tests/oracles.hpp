#ifndef VWS_TEST_ORACLES_HPP
#define VWS_TEST_ORACLES_HPP

// Reference computations for the tests, written independently of the
// library algorithms (brute force or closed form).

#include <Eigen/Dense>

#include "vws/vws.hpp"

namespace oracle {

using vws::Box;
using vws::Grid;
using vws::Point;

/// Mg by enumerating every grid-aligned cube inside the box and summing
/// its cells directly.
inline std::vector<double> brute_maximal(const Grid& g, const std::vector<double>& cells) {
  const int n = g.n(), d = g.dim();
  std::vector<double> best(cells.size(), 0.0);
  for (std::size_t c = 0; c < cells.size(); ++c) best[c] = std::abs(cells[c]);
  for (int m = 1; m <= n; ++m)
    for (int j0 = 0; j0 <= (d == 2 ? n - m : 0); ++j0)
      for (int i0 = 0; i0 <= n - m; ++i0) {
        double s = 0.0;
        for (int j = j0; j < (d == 2 ? j0 + m : 1); ++j)
          for (int i = i0; i < i0 + m; ++i) s += std::abs(cells[g.cell_index(i, j)]);
        const double avg = s / std::pow(static_cast<double>(m), d);
        for (int j = j0; j < (d == 2 ? j0 + m : 1); ++j)
          for (int i = i0; i < i0 + m; ++i) {
            double& b = best[g.cell_index(i, j)];
            b = std::max(b, avg);
          }
      }
  return best;
}

/// Largest (mean w)(mean w^{-1/(p-1)})^{p-1} over the same cubes, brute force.
inline double brute_ap(const Grid& g, const std::vector<double>& w, double p) {
  const int n = g.n(), d = g.dim();
  double best = 0.0;
  for (int m = 1; m <= n; ++m)
    for (int j0 = 0; j0 <= (d == 2 ? n - m : 0); ++j0)
      for (int i0 = 0; i0 <= n - m; ++i0) {
        double a = 0.0, b = 0.0;
        int cnt = 0;
        for (int j = j0; j < (d == 2 ? j0 + m : 1); ++j)
          for (int i = i0; i < i0 + m; ++i) {
            const double v = w[g.cell_index(i, j)];
            a += v;
            b += std::pow(v, -1.0 / (p - 1.0));
            ++cnt;
          }
        best = std::max(best, (a / cnt) * std::pow(b / cnt, p - 1.0));
      }
  return best;
}

/// Distance between closed intervals.
inline double gap(double a0, double a1, double b0, double b1) { return std::max({0.0, b0 - a1, a0 - b1}); }

/// Distance from a closed box to the complement of the open unit square:
/// the smallest distance from the box to one of the four sides (0 if the
/// box leaves the open square).
inline double unit_square_distance(const Box& b) {
  if (b.lo[0] <= 0.0 || b.lo[1] <= 0.0 || b.hi[0] >= 1.0 || b.hi[1] >= 1.0) return 0.0;
  return std::min({b.lo[0], b.lo[1], 1.0 - b.hi[0], 1.0 - b.hi[1]});
}

/// For the open disc: r minus the farthest box corner from the center.
inline double disc_distance(const Box& b, Point c, double r) {
  double far = 0.0;
  for (double x : {b.lo[0], b.hi[0]})
    for (double y : {b.lo[1], b.hi[1]}) far = std::max(far, std::hypot(x - c[0], y - c[1]));
  return std::max(0.0, r - far);
}

/// For the square minus the closed disc: the smaller of the distance to the
/// square's sides and the distance to the disc.
inline double square_minus_disc_distance(const Box& b, Point c, double r) {
  const double dx = gap(b.lo[0], b.hi[0], c[0], c[0]), dy = gap(b.lo[1], b.hi[1], c[1], c[1]);
  const double to_disc = std::max(0.0, std::hypot(dx, dy) - r);
  return std::min(unit_square_distance(b), to_disc);
}

struct Segment {
  Point a, b;  // axis-parallel
};

/// Boundary of a union of open rectangles as axis-parallel segments: every
/// rectangle edge is cut at all rectangle coordinates and a piece is kept
/// when its midpoint lies in no other rectangle's closure.
inline std::vector<Segment> union_boundary(const std::vector<Box>& rects) {
  std::vector<double> xs, ys;
  for (const auto& r : rects) {
    xs.insert(xs.end(), {r.lo[0], r.hi[0]});
    ys.insert(ys.end(), {r.lo[1], r.hi[1]});
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  auto closed_in = [](const Box& r, Point x) {
    return x[0] >= r.lo[0] && x[0] <= r.hi[0] && x[1] >= r.lo[1] && x[1] <= r.hi[1];
  };
  auto open_in = [](const Box& r, Point x) {
    return x[0] > r.lo[0] && x[0] < r.hi[0] && x[1] > r.lo[1] && x[1] < r.hi[1];
  };
  std::vector<Segment> out;
  for (std::size_t k = 0; k < rects.size(); ++k) {
    const Box& r = rects[k];
    auto emit = [&](Point a, Point b) {
      const Point mid{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
      // A boundary point lies in no open rectangle. Edges shared by two
      // touching rectangles are interior to the union; they are dropped when
      // points just off both sides are covered.
      for (std::size_t m = 0; m < rects.size(); ++m)
        if (m != k && open_in(rects[m], mid)) return;
      const double e = 1e-9;
      const bool vertical = a[0] == b[0];
      const Point left = vertical ? Point{mid[0] - e, mid[1]} : Point{mid[0], mid[1] - e};
      const Point right = vertical ? Point{mid[0] + e, mid[1]} : Point{mid[0], mid[1] + e};
      bool lcov = false, rcov = false;
      for (const auto& q : rects) {
        lcov = lcov || closed_in(q, left);
        rcov = rcov || closed_in(q, right);
      }
      if (lcov && rcov) return;
      out.push_back({a, b});
    };
    for (double x : {r.lo[0], r.hi[0]})
      for (std::size_t i = 0; i + 1 < ys.size(); ++i)
        if (ys[i] >= r.lo[1] && ys[i + 1] <= r.hi[1] && ys[i] < ys[i + 1]) emit({x, ys[i]}, {x, ys[i + 1]});
    for (double y : {r.lo[1], r.hi[1]})
      for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        if (xs[i] >= r.lo[0] && xs[i + 1] <= r.hi[0] && xs[i] < xs[i + 1]) emit({xs[i], y}, {xs[i + 1], y});
  }
  return out;
}

/// dist(B, O^c) for a union of open rectangles: 0 unless the box lies in O,
/// then the distance to the nearest boundary segment.
inline double rect_union_distance(const Box& b, const std::vector<Box>& rects) {
  // The box lies in O iff its corners and center do and no boundary segment
  // meets it.
  const auto segs = union_boundary(rects);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : segs) {
    const double dx = gap(b.lo[0], b.hi[0], std::min(s.a[0], s.b[0]), std::max(s.a[0], s.b[0]));
    const double dy = gap(b.lo[1], b.hi[1], std::min(s.a[1], s.b[1]), std::max(s.a[1], s.b[1]));
    best = std::min(best, std::hypot(dx, dy));
  }
  const Point c = b.center();
  bool inside = false;
  for (const auto& r : rects) inside = inside || (c[0] > r.lo[0] && c[0] < r.hi[0] && c[1] > r.lo[1] && c[1] < r.hi[1]);
  return inside ? best : 0.0;
}

inline const std::vector<Box>& two_rectangles() {
  static const std::vector<Box> r{Box{2, {0.1, 0.15}, {0.85, 0.45}}, Box{2, {0.3, 0.05}, {0.55, 0.9}}};
  return r;
}

/// Exact dist(B, O^c) for the named reference sets.
inline double named_distance(const std::string& name, const Box& b) {
  if (name == "square") return unit_square_distance(b);
  if (name == "disc") return disc_distance(b, {0.5, 0.5}, 0.3);
  if (name == "square_minus_disc") return square_minus_disc_distance(b, {0.5, 0.5}, 0.3);
  if (name == "two_rectangles") return rect_union_distance(b, two_rectangles());
  throw std::invalid_argument("no oracle for " + name);
}

/// Discrete p = 2 problem in 1D: (u_{i+1} - u_i)/h = f_i + c, the tridiagonal
/// system D^T D u = D^T f solved by the Thomas algorithm.
inline std::vector<double> linear_1d(const std::vector<double>& f) {
  const std::size_t n = f.size();
  const double h = 1.0 / static_cast<double>(n);
  // Unknowns u_1..u_{n-1}; row i: (2u_i - u_{i-1} - u_{i+1})/h = f_{i-1} - f_i.
  const std::size_t m = n - 1;
  std::vector<double> a(m, -1.0 / h), b(m, 2.0 / h), c(m, -1.0 / h), r(m);
  for (std::size_t i = 0; i < m; ++i) r[i] = f[i] - f[i + 1];
  for (std::size_t i = 1; i < m; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    r[i] -= w * r[i - 1];
  }
  std::vector<double> u(n + 1, 0.0);
  for (std::size_t i = m; i-- > 0;) u[i + 1] = (r[i] - (i + 1 < m ? c[i] * u[i + 2] : 0.0)) / b[i];
  return u;
}

/// Discrete p = 2 problem in 2D by a dense solve: minimizes
/// sum_c |G_c u - f_c|^2 over interior nodes, G_c the averaged cell gradient.
inline std::vector<double> linear_2d(const Grid& g, const vws::VectorField& f) {
  const int n = g.n();
  const double h = g.h();
  std::vector<long> id(g.node_count(), -1);
  long m = 0;
  for (std::size_t k = 0; k < g.node_count(); ++k)
    if (!g.is_boundary_node(k)) id[k] = m++;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const std::size_t c = g.cell_index(i, j);
      const std::size_t nd[4] = {g.node_index(i, j), g.node_index(i + 1, j), g.node_index(i, j + 1),
                                 g.node_index(i + 1, j + 1)};
      const double gx[4] = {-0.5 / h, 0.5 / h, -0.5 / h, 0.5 / h};
      const double gy[4] = {-0.5 / h, -0.5 / h, 0.5 / h, 0.5 / h};
      for (int a = 0; a < 4; ++a) {
        if (id[nd[a]] < 0) continue;
        rhs[id[nd[a]]] += (gx[a] * f.cell(c)[0] + gy[a] * f.cell(c)[1]);
        for (int b = 0; b < 4; ++b)
          if (id[nd[b]] >= 0) A(id[nd[a]], id[nd[b]]) += gx[a] * gx[b] + gy[a] * gy[b];
      }
    }
  const Eigen::VectorXd x = A.ldlt().solve(rhs);
  std::vector<double> u(g.node_count(), 0.0);
  for (std::size_t k = 0; k < g.node_count(); ++k)
    if (id[k] >= 0) u[k] = x[id[k]];
  return u;
}

/// int over the box of |grad (I u) - grad w|^p by a tensor Gauss rule per
/// cell, with grad w given analytically.
inline double interpolant_error(const vws::SobolevFunction& u, const std::function<Point(const Point&)>& grad_w, double p) {
  const Grid& g = u.grid();
  const double h = g.h();
  const double gx[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  double total = 0.0;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      const double u00 = u.at(g.node_index(i, j), 0), u10 = u.at(g.node_index(i + 1, j), 0);
      const double u01 = u.at(g.node_index(i, j + 1), 0), u11 = u.at(g.node_index(i + 1, j + 1), 0);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const double s = gx[a], t = gx[b];
          const double dx = ((u10 - u00) * (1 - t) + (u11 - u01) * t) / h;
          const double dy = ((u01 - u00) * (1 - s) + (u11 - u10) * s) / h;
          const Point gwv = grad_w({(i + s) * h, (j + t) * h});
          total += gw[a] * gw[b] * h * h * std::pow(std::hypot(dx - gwv[0], dy - gwv[1]), p);
        }
    }
  return total;
}

/// Least-squares slope of log(err) against log(h).
inline double convergence_order(const std::vector<double>& hs, const std::vector<double>& errs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double x = std::log(hs[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Plain midpoint integral of |v|^p over cells.
inline double power_integral(const vws::VectorField& f, double p) {
  double s = 0.0;
  for (std::size_t c = 0; c < f.cell_count(); ++c) s += std::pow(f.magnitude(c), p);
  return s * f.grid().cell_volume();
}

}  // namespace oracle

#endif  // VWS_TEST_ORACLES_HPP
