#ifndef VWS_WHITNEY_HPP
#define VWS_WHITNEY_HPP

// Dyadic Whitney covers of bounded open sets and their Lipschitz partition
// of unity.
//
// Selection rule: a dyadic cube meeting O is kept as soon as
// dist(Q, O^c) > diam(Q); otherwise it is split. A kept cube's parent failed
// the test, which gives dist(Q, O^c) <= dist(parent, O^c) + diam(parent)
// <= 2 diam(parent) = 4 diam(Q).

#include <memory>
#include <ostream>
#include <sstream>

#include "vws/mask.hpp"

namespace vws {

struct DyadicCube {
  int dim = 1;
  int level = 0;
  std::array<std::int64_t, 2> index{0, 0};

  double side() const { return std::ldexp(1.0, -level); }
  double diameter() const { return std::sqrt(static_cast<double>(dim)) * side(); }

  Box box() const {
    Box b;
    b.dim = dim;
    const double s = side();
    for (int a = 0; a < dim; ++a) {
      b.lo[a] = static_cast<double>(index[a]) * s;
      b.hi[a] = static_cast<double>(index[a] + 1) * s;
    }
    return b;
  }

  /// alpha * Q, scaled about the center.
  Box enlarged(double alpha) const { return box().scaled(alpha); }

  std::vector<DyadicCube> children() const {
    std::vector<DyadicCube> out;
    const int m = dim == 2 ? 4 : 2;
    for (int k = 0; k < m; ++k) {
      DyadicCube c{dim, level + 1, {2 * index[0] + (k & 1), dim == 2 ? 2 * index[1] + (k >> 1) : 0}};
      out.push_back(c);
    }
    return out;
  }

  DyadicCube parent() const {
    require(level > 0, "dyadic cube: level-0 cube has no parent");
    auto half = [](std::int64_t k) { return k >= 0 ? k / 2 : -((-k + 1) / 2); };
    return {dim, level - 1, {half(index[0]), dim == 2 ? half(index[1]) : 0}};
  }

  bool operator==(const DyadicCube& o) const { return dim == o.dim && level == o.level && index == o.index; }
  bool operator<(const DyadicCube& o) const {
    if (level != o.level) return level < o.level;
    if (index[1] != o.index[1]) return index[1] < o.index[1];
    return index[0] < o.index[0];
  }
};

/// 4^d - 2^d: the bound on neighbors and on overlaps of the 3/2-enlargements.
inline int neighbor_bound(int dim) { return dim == 2 ? 12 : 2; }

/// Cover depth used for truncation on a grid: four levels below the cell size.
inline int default_max_level(const Grid& g) { return g.level() + 4; }

/// Bucket grid over the enlarged cubes, for point and box queries.
class CoverIndex {
 public:
  static constexpr double kReach = 1.5;

  CoverIndex() = default;
  CoverIndex(int dim, const std::vector<DyadicCube>& cubes) : dim_(dim) {
    if (cubes.empty()) return;
    box_ = cubes.front().enlarged(kReach);
    for (const auto& q : cubes) {
      const Box e = q.enlarged(kReach);
      for (int a = 0; a < dim_; ++a) {
        box_.lo[a] = std::min(box_.lo[a], e.lo[a]);
        box_.hi[a] = std::max(box_.hi[a], e.hi[a]);
      }
    }
    const double target = dim_ == 2 ? std::sqrt(static_cast<double>(cubes.size())) : static_cast<double>(cubes.size());
    buckets_ = 1;
    while (buckets_ < target && buckets_ < (dim_ == 2 ? 256 : 65536)) buckets_ *= 2;
    const std::size_t total = dim_ == 2 ? static_cast<std::size_t>(buckets_) * buckets_ : buckets_;
    cells_.assign(total, {});
    for (std::size_t i = 0; i < cubes.size(); ++i) {
      auto [r0, r1] = range(cubes[i].enlarged(kReach));
      for (int j = r0[1]; j <= r1[1]; ++j)
        for (int k = r0[0]; k <= r1[0]; ++k) cells_[bucket(k, j)].push_back(i);
    }
  }

  /// Candidate cubes whose kReach-enlargement may meet the box (sorted, unique).
  std::vector<std::size_t> candidates(const Box& b) const {
    std::vector<std::size_t> out;
    if (cells_.empty()) return out;
    for (int a = 0; a < dim_; ++a)
      if (b.hi[a] < box_.lo[a] || b.lo[a] > box_.hi[a]) return out;
    auto [r0, r1] = range(b);
    for (int j = r0[1]; j <= r1[1]; ++j)
      for (int k = r0[0]; k <= r1[0]; ++k) {
        const auto& cell = cells_[bucket(k, j)];
        out.insert(out.end(), cell.begin(), cell.end());
      }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  std::pair<std::array<int, 2>, std::array<int, 2>> range(const Box& b) const {
    std::array<int, 2> r0{0, 0}, r1{0, 0};
    for (int a = 0; a < dim_; ++a) {
      const double w = (box_.hi[a] - box_.lo[a]) / buckets_;
      r0[a] = std::clamp(static_cast<int>(std::floor((b.lo[a] - box_.lo[a]) / w)), 0, buckets_ - 1);
      r1[a] = std::clamp(static_cast<int>(std::floor((b.hi[a] - box_.lo[a]) / w)), 0, buckets_ - 1);
    }
    return {r0, r1};
  }
  std::size_t bucket(int k, int j) const { return static_cast<std::size_t>(j) * buckets_ + static_cast<std::size_t>(k); }

  int dim_ = 1;
  Box box_;
  int buckets_ = 1;
  std::vector<std::vector<std::size_t>> cells_;
};

class WhitneyCover {
 public:
  WhitneyCover() = default;
  WhitneyCover(int dim, int max_level, std::vector<DyadicCube> cubes, std::vector<DyadicCube> frontier)
      : dim_(dim), max_level_(max_level), cubes_(std::move(cubes)), frontier_(std::move(frontier)) {
    std::sort(cubes_.begin(), cubes_.end());
    std::sort(frontier_.begin(), frontier_.end());
    index_ = std::make_shared<CoverIndex>(dim_, cubes_);
    neighbors_.resize(cubes_.size());
    for (std::size_t i = 0; i < cubes_.size(); ++i) {
      const Box bi = cubes_[i].box();
      for (std::size_t j : index_->candidates(bi))
        if (j != i && boxes_meet(bi, cubes_[j].box())) neighbors_[i].push_back(j);
    }
    if (!cubes_.empty()) {
      bbox_ = cubes_.front().box();
      for (const auto& q : cubes_) {
        const Box b = q.box();
        for (int a = 0; a < dim_; ++a) {
          bbox_.lo[a] = std::min(bbox_.lo[a], b.lo[a]);
          bbox_.hi[a] = std::max(bbox_.hi[a], b.hi[a]);
        }
      }
    } else {
      bbox_.dim = dim_;
    }
  }

  int dim() const { return dim_; }
  int max_level() const { return max_level_; }
  std::size_t size() const { return cubes_.size(); }
  bool empty() const { return cubes_.empty(); }
  const DyadicCube& cube(std::size_t i) const { return cubes_.at(i); }
  const std::vector<DyadicCube>& cubes() const { return cubes_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }
  const Box& bounding_box() const { return bbox_; }
  /// Cubes at max_level still meeting the boundary region; empty means the
  /// cover resolved O completely.
  const std::vector<DyadicCube>& frontier() const { return frontier_; }
  bool truncated() const { return !frontier_.empty(); }

  /// Cubes whose closed alpha-enlargement contains x (alpha <= 3/2).
  std::vector<std::size_t> containing(const Point& x, double alpha) const {
    require(alpha <= CoverIndex::kReach, "cover query: enlargement exceeds index reach");
    std::vector<std::size_t> out;
    if (!index_) return out;
    for (std::size_t i : index_->candidates(Box{dim_, x, x}))
      if (cubes_[i].enlarged(alpha).contains(x)) out.push_back(i);
    return out;
  }

  /// Cubes whose closed alpha-enlargement meets the box (alpha <= 3/2).
  std::vector<std::size_t> meeting(const Box& b, double alpha) const {
    require(alpha <= CoverIndex::kReach, "cover query: enlargement exceeds index reach");
    std::vector<std::size_t> out;
    if (!index_) return out;
    for (std::size_t i : index_->candidates(b))
      if (boxes_meet(cubes_[i].enlarged(alpha), b)) out.push_back(i);
    return out;
  }

 private:
  int dim_ = 1;
  int max_level_ = 0;
  std::vector<DyadicCube> cubes_;
  std::vector<DyadicCube> frontier_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::shared_ptr<const CoverIndex> index_;
  Box bbox_;
};

inline WhitneyCover whitney_decompose(const OpenSetMask& mask, int max_level) {
  const int d = mask.dim();
  require(max_level >= 0 && max_level <= 40, "whitney: max_level out of range");
  if (mask.is_whole_space())
    throw InvalidArgument("whitney: the open set is the whole space; no Whitney cover exists");
  if (mask.is_empty()) return WhitneyCover(d, max_level, {}, {});
  const Box bb = mask.bounding_box();
  for (int a = 0; a < d; ++a)
    require(std::isfinite(bb.lo[a]) && std::isfinite(bb.hi[a]), "whitney: open set must be bounded");

  std::vector<DyadicCube> stack;
  std::array<std::int64_t, 2> k0{0, 0}, k1{0, 0};
  for (int a = 0; a < d; ++a) {
    k0[a] = static_cast<std::int64_t>(std::floor(bb.lo[a]));
    k1[a] = std::max(k0[a], static_cast<std::int64_t>(std::ceil(bb.hi[a])) - 1);
  }
  for (std::int64_t j = k0[1]; j <= k1[1]; ++j)
    for (std::int64_t i = k0[0]; i <= k1[0]; ++i) stack.push_back({d, 0, {i, j}});

  std::vector<DyadicCube> kept, frontier;
  while (!stack.empty()) {
    const DyadicCube q = stack.back();
    stack.pop_back();
    const Box b = q.box();
    if (!mask.may_intersect(b)) continue;
    const double dist = mask.distance_to_complement(b);
    if (dist > q.diameter()) {
      if (q.level == 0 && dist > 4.0 * q.diameter())
        throw InvalidArgument("whitney: open set too large for unit root cubes");
      kept.push_back(q);
      continue;
    }
    if (q.level >= max_level) {
      frontier.push_back(q);
      continue;
    }
    for (const auto& c : q.children()) stack.push_back(c);
  }
  return WhitneyCover(d, max_level, std::move(kept), std::move(frontier));
}

inline const std::vector<std::size_t>& neighbors(const WhitneyCover& cover, std::size_t i) {
  require(i < cover.size(), "neighbors: cube index out of range");
  return cover.neighbors(i);
}

/// psi_i = phi_i / sum_j phi_j with the tensor-product ramp phi_i: 1 on
/// 1/2 Q_i, 0 outside 9/8 Q_i, linear in between. Keeps a reference to the
/// cover, which must outlive it.
class PartitionOfUnity {
 public:
  static constexpr double kInner = 0.25;     // half-width of 1/2 Q in units of the side
  static constexpr double kOuter = 0.5625;   // half-width of 9/8 Q
  static constexpr double kSlope = 1.0 / (kOuter - kInner);  // 16/5

  explicit PartitionOfUnity(const WhitneyCover& cover) : cover_(&cover) {
    require(!cover.empty(), "partition of unity: empty cover");
  }

  const WhitneyCover& cover() const { return *cover_; }

  double bump(std::size_t i, const Point& x) const {
    const DyadicCube& q = cover_->cube(i);
    const Box b = q.box();
    const double s = q.side();
    double v = 1.0;
    for (int a = 0; a < q.dim; ++a) {
      const double t = std::abs(x[a] - 0.5 * (b.lo[a] + b.hi[a])) / s;
      if (t >= kOuter) return 0.0;
      if (t > kInner) v *= (kOuter - t) * kSlope;
    }
    return v;
  }

  /// Nonzero (i, psi_i(x)) pairs; empty when no 9/8-enlargement contains x.
  std::vector<std::pair<std::size_t, double>> evaluate(const Point& x) const {
    std::vector<std::pair<std::size_t, double>> out;
    double total = 0.0;
    for (std::size_t i : cover_->containing(x, 2.0 * kOuter)) {
      const double v = bump(i, x);
      if (v > 0.0) {
        out.emplace_back(i, v);
        total += v;
      }
    }
    for (auto& e : out) e.second /= total;
    return out;
  }

  double value(std::size_t i, const Point& x) const {
    for (auto [j, v] : evaluate(x))
      if (j == i) return v;
    return 0.0;
  }

  /// c(d) with diam(Q_i) |d psi_i / dx_a| <= c(d) for every axis a.
  ///
  /// |d phi_j| <= (16/5)/side_j and side_j >= side_i / 2 on overlaps, at most
  /// K = 4^d - 2^d bumps overlap, and sum phi >= 5^{-d} on every cube.
  double lipschitz_constant() const { return lipschitz_constant(cover_->dim()); }

  static double lipschitz_constant(int dim) {
    const double k = neighbor_bound(dim);
    const double low = std::pow(5.0, dim);
    return std::sqrt(static_cast<double>(dim)) * kSlope * (low + 2.0 * k * low * low);
  }

 private:
  const WhitneyCover* cover_;
};

inline PartitionOfUnity partition_of_unity(const WhitneyCover& cover) { return PartitionOfUnity(cover); }

/// CSV: i, level, index tuple, neighbor list (';'-separated).
inline void write_cover_csv(std::ostream& os, const WhitneyCover& cover) {
  os << "i,level,k0" << (cover.dim() == 2 ? ",k1" : "") << ",neighbors\n";
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const auto& q = cover.cube(i);
    os << i << ',' << q.level << ',' << q.index[0];
    if (cover.dim() == 2) os << ',' << q.index[1];
    os << ',';
    const auto& nb = cover.neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k) os << (k ? ";" : "") << nb[k];
    os << '\n';
  }
}

/// SVG drawing of a 2D cover in the unit square (frontier cubes in red).
inline void write_cover_svg(std::ostream& os, const WhitneyCover& cover, int pixels = 512) {
  require(cover.dim() == 2, "cover svg: 2D covers only");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pixels << "\" height=\"" << pixels
     << "\" viewBox=\"0 0 1 1\">\n<g transform=\"translate(0,1) scale(1,-1)\" stroke-width=\"0.001\">\n";
  auto rect = [&](const DyadicCube& q, const char* fill, const char* stroke) {
    const Box b = q.box();
    os << "<rect x=\"" << b.lo[0] << "\" y=\"" << b.lo[1] << "\" width=\"" << b.extent(0) << "\" height=\""
       << b.extent(1) << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
  };
  for (const auto& q : cover.cubes()) rect(q, "#dde8f5", "#1f4e79");
  for (const auto& q : cover.frontier()) rect(q, "#f5b7b1", "#922b21");
  os << "</g>\n</svg>\n";
}

}  // namespace vws

#endif  // VWS_WHITNEY_HPP
