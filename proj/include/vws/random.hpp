#ifndef VWS_RANDOM_HPP
#define VWS_RANDOM_HPP

// Seeded random test data: zero-trace functions, cell fields, points in sets.

#include <random>

#include "vws/mask.hpp"

namespace vws {

using Rng = std::mt19937_64;

/// Sum of a few sine modes (zero on the boundary) plus optional node noise.
inline SobolevFunction random_function(const Grid& g, int targets, Rng& rng, int modes = 4, double noise = 0.0) {
  std::uniform_int_distribution<int> mode(1, 6);
  std::normal_distribution<double> amp(0.0, 1.0);
  struct Term {
    int mx, my, comp;
    double a;
  };
  std::vector<Term> terms;
  for (int c = 0; c < targets; ++c)
    for (int k = 0; k < modes; ++k) terms.push_back({mode(rng), mode(rng), c, amp(rng) / (1.0 + k)});
  std::vector<double> v(g.node_count() * static_cast<std::size_t>(targets), 0.0);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    if (g.is_boundary_node(node)) continue;
    const Point x = g.node_point(node);
    for (const auto& t : terms) {
      const double sy = g.dim() == 2 ? std::sin(M_PI * t.my * x[1]) : 1.0;
      v[node * targets + t.comp] += t.a * std::sin(M_PI * t.mx * x[0]) * sy;
    }
    if (noise > 0.0)
      for (int c = 0; c < targets; ++c) v[node * targets + c] += noise * amp(rng);
  }
  return SobolevFunction(g, targets, std::move(v), true);
}

/// Cell field with i.i.d. normal components scaled by `scale`.
inline VectorField random_field(const Grid& g, int targets, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  return sample_cells(g, targets, [&](const Point&, std::span<double> out) {
    for (double& v : out) v = nd(rng);
  });
}

/// Uniform point of the unit box.
inline Point random_point(int dim, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {u(rng), dim == 2 ? u(rng) : 0.0};
}

/// Rejection sample of a point in O within the unit box; throws when O looks empty.
inline Point random_point_in(const OpenSetMask& mask, Rng& rng, int max_tries = 100000) {
  Box bb = mask.bounding_box();
  const Box ub = unit_box(mask.dim());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int a = 0; a < mask.dim(); ++a) {
    bb.lo[a] = std::max(bb.lo[a], ub.lo[a]);
    bb.hi[a] = std::min(bb.hi[a], ub.hi[a]);
  }
  for (int t = 0; t < max_tries; ++t) {
    Point x{};
    for (int a = 0; a < mask.dim(); ++a) x[a] = bb.lo[a] + (bb.hi[a] - bb.lo[a]) * u(rng);
    if (mask.contains(x)) return x;
  }
  throw InvalidArgument("random point: no point of " + mask.describe() + " found");
}

}  // namespace vws

#endif  // VWS_RANDOM_HPP
