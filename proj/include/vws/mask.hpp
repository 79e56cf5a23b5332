#ifndef VWS_MASK_HPP
#define VWS_MASK_HPP

// Open subsets O of R^d with an exact distance to the complement.
//
// Every mask answers dist(B, O^c) for closed boxes B exactly (up to the
// rounding of one square root). The convention is dist(B, O^c) = 0 iff B
// meets O^c, so "B is a subset of O" is the same as "distance > 0".

#include <limits>
#include <memory>
#include <sstream>

#include "vws/field.hpp"

namespace vws {

class OpenSetMask {
 public:
  virtual ~OpenSetMask() = default;

  virtual int dim() const = 0;
  virtual bool contains(const Point& x) const = 0;
  /// Exact Euclidean dist(B, O^c); 0 iff the closed box meets O^c.
  virtual double distance_to_complement(const Box& b) const = 0;
  /// False only when the closed box certainly misses O.
  virtual bool may_intersect(const Box& b) const = 0;
  /// Closed box containing O (may be infinite for unbounded sets).
  virtual Box bounding_box() const = 0;
  virtual std::string describe() const = 0;
  virtual bool is_whole_space() const { return false; }
  virtual bool is_empty() const { return false; }

  double distance_to_complement(const Point& x) const {
    Box b;
    b.dim = dim();
    b.lo = x;
    b.hi = x;
    return distance_to_complement(b);
  }

  /// A cell belongs to O iff its center does.
  std::vector<bool> cell_membership(const Grid& g) const {
    std::vector<bool> in(g.cell_count());
    for (std::size_t c = 0; c < in.size(); ++c) in[c] = contains(g.cell_center(c));
    return in;
  }
};

using MaskPtr = std::shared_ptr<const OpenSetMask>;

namespace detail {
inline Box infinite_box(int dim) {
  Box b;
  b.dim = dim;
  for (int a = 0; a < dim; ++a) {
    b.lo[a] = -std::numeric_limits<double>::infinity();
    b.hi[a] = std::numeric_limits<double>::infinity();
  }
  return b;
}
}  // namespace detail

class EmptySet final : public OpenSetMask {
 public:
  explicit EmptySet(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  bool contains(const Point&) const override { return false; }
  double distance_to_complement(const Box&) const override { return 0.0; }
  bool may_intersect(const Box&) const override { return false; }
  Box bounding_box() const override {
    Box b;
    b.dim = dim_;
    return b;
  }
  std::string describe() const override { return "empty"; }
  bool is_empty() const override { return true; }

 private:
  int dim_;
};

class WholeSpace final : public OpenSetMask {
 public:
  explicit WholeSpace(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  bool contains(const Point&) const override { return true; }
  double distance_to_complement(const Box&) const override { return std::numeric_limits<double>::infinity(); }
  bool may_intersect(const Box&) const override { return true; }
  Box bounding_box() const override { return detail::infinite_box(dim_); }
  std::string describe() const override { return "whole-space"; }
  bool is_whole_space() const override { return true; }

 private:
  int dim_;
};

/// {x : normal . x < offset} with a unit normal.
class HalfSpace final : public OpenSetMask {
 public:
  HalfSpace(int dim, Point normal, double offset) : dim_(dim), normal_(normal), offset_(offset) {
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) s += normal_[a] * normal_[a];
    require(s > 0.0, "half-space: zero normal");
    s = std::sqrt(s);
    for (int a = 0; a < dim_; ++a) normal_[a] /= s;
    offset_ /= s;
  }
  int dim() const override { return dim_; }
  bool contains(const Point& x) const override { return project(x) < offset_; }
  double distance_to_complement(const Box& b) const override {
    double m = 0.0;
    for (int a = 0; a < dim_; ++a) m += normal_[a] * (normal_[a] > 0 ? b.hi[a] : b.lo[a]);
    return std::max(0.0, offset_ - m);
  }
  bool may_intersect(const Box& b) const override {
    double m = 0.0;
    for (int a = 0; a < dim_; ++a) m += normal_[a] * (normal_[a] > 0 ? b.lo[a] : b.hi[a]);
    return m < offset_;
  }
  Box bounding_box() const override { return detail::infinite_box(dim_); }
  std::string describe() const override {
    std::ostringstream os;
    os << "halfspace(n=(" << normal_[0] << "," << normal_[1] << "),b=" << offset_ << ")";
    return os.str();
  }

 private:
  double project(const Point& x) const {
    double m = 0.0;
    for (int a = 0; a < dim_; ++a) m += normal_[a] * x[a];
    return m;
  }
  int dim_;
  Point normal_;
  double offset_;
};

/// Open ball {|x - c| < r}; an open interval in 1D.
class Ball final : public OpenSetMask {
 public:
  Ball(int dim, Point center, double radius) : dim_(dim), c_(center), r_(radius) {
    require(radius > 0.0, "ball: radius must be positive");
  }
  int dim() const override { return dim_; }
  bool contains(const Point& x) const override {
    Box b{dim_, x, x};
    return point_box_distance(c_, b) < r_;
  }
  double distance_to_complement(const Box& b) const override {
    return std::max(0.0, r_ - point_box_max_distance(c_, b));
  }
  bool may_intersect(const Box& b) const override { return point_box_distance(c_, b) < r_; }
  Box bounding_box() const override {
    Box b;
    b.dim = dim_;
    for (int a = 0; a < dim_; ++a) {
      b.lo[a] = c_[a] - r_;
      b.hi[a] = c_[a] + r_;
    }
    return b;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "ball(c=(" << c_[0] << "," << c_[1] << "),r=" << r_ << ")";
    return os.str();
  }
  const Point& center() const { return c_; }
  double radius() const { return r_; }

 private:
  int dim_;
  Point c_;
  double r_;
};

/// Complement of the closed ball, {|x - c| > r}.
class BallExterior final : public OpenSetMask {
 public:
  BallExterior(int dim, Point center, double radius) : dim_(dim), c_(center), r_(radius) {
    require(radius > 0.0, "ball exterior: radius must be positive");
  }
  int dim() const override { return dim_; }
  bool contains(const Point& x) const override {
    Box b{dim_, x, x};
    return point_box_distance(c_, b) > r_;
  }
  double distance_to_complement(const Box& b) const override {
    return std::max(0.0, point_box_distance(c_, b) - r_);
  }
  bool may_intersect(const Box& b) const override { return point_box_max_distance(c_, b) > r_; }
  Box bounding_box() const override { return detail::infinite_box(dim_); }
  std::string describe() const override {
    std::ostringstream os;
    os << "ball-exterior(c=(" << c_[0] << "," << c_[1] << "),r=" << r_ << ")";
    return os.str();
  }

 private:
  int dim_;
  Point c_;
  double r_;
};

/// O = A intersected with B; O^c = A^c union B^c, so distances take the min.
class Intersection final : public OpenSetMask {
 public:
  Intersection(MaskPtr a, MaskPtr b) : a_(std::move(a)), b_(std::move(b)) {
    require(a_ && b_ && a_->dim() == b_->dim(), "intersection: dimension mismatch");
  }
  int dim() const override { return a_->dim(); }
  bool contains(const Point& x) const override { return a_->contains(x) && b_->contains(x); }
  double distance_to_complement(const Box& b) const override {
    return std::min(a_->distance_to_complement(b), b_->distance_to_complement(b));
  }
  bool may_intersect(const Box& b) const override { return a_->may_intersect(b) && b_->may_intersect(b); }
  Box bounding_box() const override { return a_->bounding_box().intersect(b_->bounding_box()); }
  std::string describe() const override { return "(" + a_->describe() + " & " + b_->describe() + ")"; }
  bool is_empty() const override { return a_->is_empty() || b_->is_empty(); }
  bool is_whole_space() const override { return a_->is_whole_space() && b_->is_whole_space(); }

 private:
  MaskPtr a_, b_;
};

/// Union of open axis-parallel boxes (overlaps allowed).
///
/// The boundary of the union lies in the faces of the boxes with the other
/// boxes' open interiors removed; those pieces are themselves subsets of O^c,
/// so the distance to O^c of a box inside O is its distance to the pieces.
class BoxUnion final : public OpenSetMask {
 public:
  BoxUnion(int dim, std::vector<Box> boxes) : dim_(dim), boxes_(std::move(boxes)) {
    for (auto& b : boxes_) {
      b.dim = dim_;
      for (int a = 0; a < dim_; ++a) require(b.hi[a] > b.lo[a], "box union: degenerate box");
    }
    build_pieces();
  }
  int dim() const override { return dim_; }
  bool contains(const Point& x) const override {
    for (const auto& b : boxes_)
      if (b.contains_interior(x)) return true;
    return false;
  }
  double distance_to_complement(const Box& b) const override {
    if (boxes_.empty()) return 0.0;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& piece : pieces_) d = std::min(d, box_distance(b, piece));
    if (d == 0.0) return 0.0;
    // The box misses the boundary; being connected it is inside O or outside.
    return contains(b.center()) ? d : 0.0;
  }
  bool may_intersect(const Box& b) const override {
    for (const auto& r : boxes_)
      if (boxes_overlap(b, r)) return true;
    return false;
  }
  Box bounding_box() const override {
    Box bb;
    bb.dim = dim_;
    if (boxes_.empty()) return bb;
    bb = boxes_.front();
    for (const auto& b : boxes_)
      for (int a = 0; a < dim_; ++a) {
        bb.lo[a] = std::min(bb.lo[a], b.lo[a]);
        bb.hi[a] = std::max(bb.hi[a], b.hi[a]);
      }
    return bb;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "boxes[";
    for (std::size_t i = 0; i < boxes_.size(); ++i) {
      const auto& b = boxes_[i];
      os << (i ? ";" : "") << "(" << b.lo[0] << "," << b.hi[0] << ")";
      if (dim_ == 2) os << "x(" << b.lo[1] << "," << b.hi[1] << ")";
    }
    os << "]";
    return os.str();
  }
  bool is_empty() const override { return boxes_.empty(); }
  const std::vector<Box>& boundary_pieces() const { return pieces_; }
  const std::vector<Box>& boxes() const { return boxes_; }

 private:
  void build_pieces() {
    for (std::size_t k = 0; k < boxes_.size(); ++k) {
      const Box& bx = boxes_[k];
      for (int a = 0; a < dim_; ++a) {
        for (double v : {bx.lo[a], bx.hi[a]}) {
          if (dim_ == 1) {
            bool removed = false;
            for (std::size_t m = 0; m < boxes_.size(); ++m)
              if (m != k && boxes_[m].lo[0] < v && v < boxes_[m].hi[0]) removed = true;
            if (!removed) pieces_.push_back(Box{1, {v, 0.0}, {v, 0.0}});
            continue;
          }
          const int o = 1 - a;
          std::vector<std::pair<double, double>> segs{{bx.lo[o], bx.hi[o]}};
          for (std::size_t m = 0; m < boxes_.size(); ++m) {
            if (m == k) continue;
            const Box& r = boxes_[m];
            if (!(r.lo[a] < v && v < r.hi[a])) continue;
            std::vector<std::pair<double, double>> next;
            for (auto [s, e] : segs) {
              if (s <= std::min(e, r.lo[o])) next.emplace_back(s, std::min(e, r.lo[o]));
              if (std::max(s, r.hi[o]) <= e) next.emplace_back(std::max(s, r.hi[o]), e);
            }
            segs = std::move(next);
          }
          for (auto [s, e] : segs) {
            Box p;
            p.dim = 2;
            p.lo[a] = v;
            p.hi[a] = v;
            p.lo[o] = s;
            p.hi[o] = e;
            pieces_.push_back(p);
          }
        }
      }
    }
  }

  int dim_;
  std::vector<Box> boxes_;
  std::vector<Box> pieces_;
};

/// O = interior of the union of the selected closed grid cells.
///
/// Distances are exact: O^c is the union of the unselected closed cells and
/// the complement of the open unit cube. A summed-area table of unselected
/// cells prunes the ring search around the query box.
class CellUnion final : public OpenSetMask {
 public:
  CellUnion(Grid grid, std::vector<bool> selected, bool whole_space = false)
      : grid_(grid), selected_(std::move(selected)), whole_space_(whole_space) {
    require(selected_.size() == grid_.cell_count(), "cell union: flag count does not match grid");
    const int n = grid_.n();
    const std::size_t w = static_cast<std::size_t>(n) + 1;
    const std::size_t rows = grid_.dim() == 2 ? w : 2;
    sat_out_.assign(w * rows, 0);
    sat_in_.assign(w * rows, 0);
    const int ny = grid_.dim() == 2 ? n : 1;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < n; ++i) {
        const bool s = selected_[grid_.cell_index(i, j)];
        const std::size_t at = static_cast<std::size_t>(j + 1) * w + static_cast<std::size_t>(i + 1);
        sat_out_[at] = (s ? 0 : 1) + sat_out_[at - 1] + sat_out_[at - w] - sat_out_[at - w - 1];
        sat_in_[at] = (s ? 1 : 0) + sat_in_[at - 1] + sat_in_[at - w] - sat_in_[at - w - 1];
        any_ = any_ || s;
      }
  }

  int dim() const override { return grid_.dim(); }
  const Grid& grid() const { return grid_; }
  const std::vector<bool>& selected() const { return selected_; }

  bool contains(const Point& x) const override {
    if (whole_space_) return true;
    const int n = grid_.n();
    std::array<std::array<int, 2>, 2> cand{};
    std::array<int, 2> count{1, 1};
    for (int a = 0; a < grid_.dim(); ++a) {
      if (!(x[a] > 0.0 && x[a] < 1.0)) return false;
      const double s = x[a] * n;
      const int i = static_cast<int>(std::floor(s));
      cand[a][0] = std::min(i, n - 1);
      if (s == std::floor(s) && i > 0) {
        cand[a][1] = i - 1;
        count[a] = 2;
      }
    }
    for (int p = 0; p < count[0]; ++p)
      for (int q = 0; q < (grid_.dim() == 2 ? count[1] : 1); ++q)
        if (!selected_[grid_.cell_index(cand[0][p], grid_.dim() == 2 ? cand[1][q] : 0)]) return false;
    return true;
  }

  double distance_to_complement(const Box& b) const override {
    if (whole_space_) return std::numeric_limits<double>::infinity();
    const int d = grid_.dim();
    double ext = std::numeric_limits<double>::infinity();
    for (int a = 0; a < d; ++a) ext = std::min({ext, b.lo[a], 1.0 - b.hi[a]});
    if (ext <= 0.0) return 0.0;
    const int n = grid_.n();
    auto [i0, i1] = cell_range(grid_, b.lo[0], b.hi[0]);
    std::pair<int, int> jr = d == 2 ? cell_range(grid_, b.lo[1], b.hi[1]) : std::pair<int, int>{0, 0};
    const int j0 = jr.first, j1 = jr.second;
    double best = ext;
    const double h = grid_.h();
    for (int r = 0;; ++r) {
      if (r >= 1 && (r - 1) * h >= best) break;
      const int a0 = i0 - r, a1 = i1 + r;
      const int b0 = d == 2 ? j0 - r : 0, b1 = d == 2 ? j1 + r : 0;
      if (a0 < 0 && a1 >= n && (d == 1 || (b0 < 0 && b1 >= n))) {
        scan_ring(b, a0, a1, b0, b1, r, best);
        break;
      }
      scan_ring(b, a0, a1, b0, b1, r, best);
      if (best == 0.0) return 0.0;
    }
    return best;
  }

  bool may_intersect(const Box& b) const override {
    if (whole_space_) return true;
    auto [i0, i1] = cell_range(grid_, b.lo[0], b.hi[0]);
    if (i0 > i1) return false;
    std::pair<int, int> jr = grid_.dim() == 2 ? cell_range(grid_, b.lo[1], b.hi[1]) : std::pair<int, int>{0, 0};
    if (jr.first > jr.second) return false;
    return count(sat_in_, i0, i1, jr.first, jr.second) > 0;
  }

  Box bounding_box() const override { return unit_box(grid_.dim()); }
  std::string describe() const override {
    return whole_space_ ? std::string("cells[all]") : "cells[n=" + std::to_string(grid_.n()) + "]";
  }
  bool is_whole_space() const override { return whole_space_; }
  bool is_empty() const override { return !whole_space_ && !any_; }

 private:
  long count(const std::vector<long>& sat, int i0, int i1, int j0, int j1) const {
    const std::size_t w = static_cast<std::size_t>(grid_.n()) + 1;
    auto at = [&](int i, int j) { return sat[static_cast<std::size_t>(j) * w + static_cast<std::size_t>(i)]; };
    return at(i1 + 1, j1 + 1) - at(i0, j1 + 1) - at(i1 + 1, j0) + at(i0, j0);
  }

  void scan_rect(const Box& b, int i0, int i1, int j0, int j1, double& best) const {
    const int n = grid_.n();
    i0 = std::max(i0, 0);
    j0 = std::max(j0, 0);
    i1 = std::min(i1, n - 1);
    j1 = std::min(j1, grid_.dim() == 2 ? n - 1 : 0);
    if (i0 > i1 || j0 > j1) return;
    if (count(sat_out_, i0, i1, j0, j1) == 0) return;
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        const std::size_t c = grid_.cell_index(i, j);
        if (!selected_[c]) best = std::min(best, box_distance(b, grid_.cell_box(c)));
      }
  }

  void scan_ring(const Box& b, int a0, int a1, int b0, int b1, int r, double& best) const {
    if (r == 0) {
      scan_rect(b, a0, a1, b0, b1, best);
      return;
    }
    if (grid_.dim() == 1) {
      scan_rect(b, a0, a0, 0, 0, best);
      scan_rect(b, a1, a1, 0, 0, best);
      return;
    }
    scan_rect(b, a0, a1, b0, b0, best);
    scan_rect(b, a0, a1, b1, b1, best);
    scan_rect(b, a0, a0, b0 + 1, b1 - 1, best);
    scan_rect(b, a1, a1, b0 + 1, b1 - 1, best);
  }

  Grid grid_;
  std::vector<bool> selected_;
  bool whole_space_ = false;
  bool any_ = false;
  std::vector<long> sat_out_, sat_in_;
};

// Convenience constructors for the analytic sets used throughout.

inline MaskPtr unit_cube_mask(int dim) {
  return std::make_shared<BoxUnion>(dim, std::vector<Box>{unit_box(dim)});
}

inline MaskPtr ball_mask(int dim, Point center, double radius) {
  return std::make_shared<Ball>(dim, center, radius);
}

inline MaskPtr cube_minus_ball_mask(int dim, Point center, double radius) {
  return std::make_shared<Intersection>(unit_cube_mask(dim), std::make_shared<BallExterior>(dim, center, radius));
}

inline MaskPtr box_union_mask(int dim, std::vector<Box> boxes) {
  return std::make_shared<BoxUnion>(dim, std::move(boxes));
}

/// The four reference sets of the cover checks (2D): unit square, disc of
/// radius 0.3, square minus that disc, and a cross-shaped union of two rectangles.
inline MaskPtr named_mask(const std::string& name) {
  const Point mid{0.5, 0.5};
  if (name == "square") return unit_cube_mask(2);
  if (name == "disc") return ball_mask(2, mid, 0.3);
  if (name == "square_minus_disc") return cube_minus_ball_mask(2, mid, 0.3);
  if (name == "two_rectangles")
    return box_union_mask(2, {Box{2, {0.1, 0.15}, {0.85, 0.45}}, Box{2, {0.3, 0.05}, {0.55, 0.9}}});
  if (name == "interval") return unit_cube_mask(1);
  throw InvalidArgument("unknown mask name: " + name);
}

}  // namespace vws

#endif  // VWS_MASK_HPP
