#ifndef VWS_COMMON_HPP
#define VWS_COMMON_HPP

#include <algorithm>
#include <atomic>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace vws {

/// Points in R^d for d <= 2. Unused trailing coordinates are zero.
using Point = std::array<double, 2>;

/// Errors raised on malformed input (shape mismatch, out-of-range parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Errors raised when a numerical computation produced garbage or a
/// guaranteed inequality was violated.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

/// Closed axis-parallel box. Only the first `dim` coordinates are used.
struct Box {
  int dim = 1;
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};

  double extent(int axis) const { return hi[axis] - lo[axis]; }

  double measure() const {
    double m = 1.0;
    for (int a = 0; a < dim; ++a) m *= std::max(0.0, extent(a));
    return m;
  }

  Point center() const {
    Point c{0.0, 0.0};
    for (int a = 0; a < dim; ++a) c[a] = 0.5 * (lo[a] + hi[a]);
    return c;
  }

  bool contains(const Point& x) const {
    for (int a = 0; a < dim; ++a)
      if (x[a] < lo[a] || x[a] > hi[a]) return false;
    return true;
  }

  bool contains_interior(const Point& x) const {
    for (int a = 0; a < dim; ++a)
      if (x[a] <= lo[a] || x[a] >= hi[a]) return false;
    return true;
  }

  /// Box scaled by `factor` about its center.
  Box scaled(double factor) const {
    Box b = *this;
    for (int a = 0; a < dim; ++a) {
      const double c = 0.5 * (lo[a] + hi[a]);
      const double r = 0.5 * factor * (hi[a] - lo[a]);
      b.lo[a] = c - r;
      b.hi[a] = c + r;
    }
    return b;
  }

  Box intersect(const Box& other) const {
    Box b = *this;
    for (int a = 0; a < dim; ++a) {
      b.lo[a] = std::max(lo[a], other.lo[a]);
      b.hi[a] = std::min(hi[a], other.hi[a]);
    }
    return b;
  }
};

/// Closed boxes intersect (touching counts).
inline bool boxes_meet(const Box& a, const Box& b) {
  for (int k = 0; k < a.dim; ++k)
    if (a.hi[k] < b.lo[k] || b.hi[k] < a.lo[k]) return false;
  return true;
}

/// Interiors overlap with positive measure.
inline bool boxes_overlap(const Box& a, const Box& b) {
  for (int k = 0; k < a.dim; ++k)
    if (a.hi[k] <= b.lo[k] || b.hi[k] <= a.lo[k]) return false;
  return true;
}

/// Euclidean distance between two closed boxes (0 if they meet).
inline double box_distance(const Box& a, const Box& b) {
  double s = 0.0;
  for (int k = 0; k < a.dim; ++k) {
    const double gap = std::max({0.0, b.lo[k] - a.hi[k], a.lo[k] - b.hi[k]});
    s += gap * gap;
  }
  return std::sqrt(s);
}

/// Distance from a point to a closed box.
inline double point_box_distance(const Point& x, const Box& b) {
  double s = 0.0;
  for (int k = 0; k < b.dim; ++k) {
    const double gap = std::max({0.0, b.lo[k] - x[k], x[k] - b.hi[k]});
    s += gap * gap;
  }
  return std::sqrt(s);
}

/// Largest distance from a point to any point of a closed box.
inline double point_box_max_distance(const Point& x, const Box& b) {
  double s = 0.0;
  for (int k = 0; k < b.dim; ++k) {
    const double g = std::max(std::abs(x[k] - b.lo[k]), std::abs(x[k] - b.hi[k]));
    s += g * g;
  }
  return std::sqrt(s);
}

inline Box unit_box(int dim) {
  Box b;
  b.dim = dim;
  for (int a = 0; a < dim; ++a) {
    b.lo[a] = 0.0;
    b.hi[a] = 1.0;
  }
  return b;
}

namespace detail {
inline double pairwise_sum_impl(const double* x, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(x, half) + pairwise_sum_impl(x + half, n - half);
}
}  // namespace detail

/// Pairwise (tree) summation. The summation order depends only on the
/// length of the input, so equal-length inputs are reduced identically.
inline double pairwise_sum(std::span<const double> x) {
  return detail::pairwise_sum_impl(x.data(), x.size());
}

inline double frobenius(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool is_power_of_two(long long v) { return v > 0 && (v & (v - 1)) == 0; }

/// Dual exponent p' = p / (p - 1).
inline double dual_exponent(double p) { return p / (p - 1.0); }

/// Linear-interpolation quantile of a sample (q in [0,1]).
inline double quantile(std::vector<double> values, double q) {
  require(!values.empty(), "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - t) + values[hi] * t;
}

/// Calls fn(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any call is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace vws

#endif  // VWS_COMMON_HPP
