#ifndef VWS_MAXIMAL_HPP
#define VWS_MAXIMAL_HPP

// Discrete Hardy-Littlewood maximal operator over grid-aligned cubes, its
// superlevel sets, and Muckenhoupt A_p constants.
//
// Cubes have side m*h (m = 1..n) and integer offsets. Only cubes inside the
// unit box are scanned: with g extended by zero, a cube sticking out of the
// box never has a larger average than a box-contained cube of the same side
// covering its inside part (or, for m > n, than the whole box).

#include <deque>
#include <memory>

#include "json.hpp"

#include "vws/mask.hpp"

namespace vws {

namespace detail {

/// Summed-area table with a zero first row and column.
class SummedArea {
 public:
  SummedArea(const Grid& g, std::span<const double> cells) : n_(g.n()), dim_(g.dim()) {
    const std::size_t w = static_cast<std::size_t>(n_) + 1;
    if (dim_ == 1) {
      s_.assign(w, 0.0);
      for (int i = 0; i < n_; ++i) s_[i + 1] = s_[i] + cells[i];
      return;
    }
    s_.assign(w * w, 0.0);
    for (int j = 0; j < n_; ++j) {
      double row = 0.0;
      for (int i = 0; i < n_; ++i) {
        row += cells[static_cast<std::size_t>(j) * n_ + i];
        s_[(j + 1) * w + (i + 1)] = s_[j * w + (i + 1)] + row;
      }
    }
  }

  /// Sum over cells [i, i+m) x [j, j+m).
  double cube_sum(int i, int j, int m) const {
    if (dim_ == 1) return s_[i + m] - s_[i];
    const std::size_t w = static_cast<std::size_t>(n_) + 1;
    return s_[(j + m) * w + (i + m)] - s_[j * w + (i + m)] - s_[(j + m) * w + i] + s_[j * w + i];
  }

 private:
  int n_, dim_;
  std::vector<double> s_;
};

/// out[i*os] = max of in[o*is] over o in [i-m+1, i] intersected with [0, K-1],
/// for i in [0, n); K = n - m + 1 so the window is never empty.
inline void window_max(const double* in, std::size_t is, int n, int m, double* out, std::size_t os) {
  const int K = n - m + 1;
  std::deque<int> dq;
  for (int i = 0; i < n; ++i) {
    if (i < K) {
      while (!dq.empty() && in[dq.back() * is] <= in[i * is]) dq.pop_back();
      dq.push_back(i);
    }
    while (dq.front() < i - m + 1) dq.pop_front();
    out[i * os] = in[dq.front() * is];
  }
}

inline std::vector<double> cell_values(const ScalarField& g) {
  if (g.location() == Location::cell) return g.values();
  const Grid& gr = g.grid();
  std::vector<double> v(gr.cell_count());
  std::array<std::size_t, 4> nd{};
  for (std::size_t c = 0; c < v.size(); ++c) {
    const int m = gr.cell_nodes(c, nd);
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += g[nd[k]];
    v[c] = s / m;
  }
  return v;
}

inline Box cube_box(const Grid& g, int i, int j, int m) {
  Box b;
  b.dim = g.dim();
  b.lo = {i * g.h(), g.dim() == 2 ? j * g.h() : 0.0};
  b.hi = {(i + m) * g.h(), g.dim() == 2 ? (j + m) * g.h() : 0.0};
  return b;
}

}  // namespace detail

/// Mg at every cell: the largest average of |g| over grid-aligned cubes
/// containing the cell. Node fields are averaged to cells first.
inline ScalarField maximal(const ScalarField& g) {
  const Grid& gr = g.grid();
  const int n = gr.n();
  std::vector<double> a = detail::cell_values(g);
  for (double& v : a) v = std::abs(v);
  const double lo = *std::min_element(a.begin(), a.end());
  const double hi = *std::max_element(a.begin(), a.end());
  const detail::SummedArea sat(gr, a);
  std::vector<double> best = a;
  std::vector<double> avg, rows, colout(static_cast<std::size_t>(n));
  for (int m = 1; m <= n; ++m) {
    const int K = n - m + 1;
    const double inv = 1.0 / (gr.dim() == 1 ? m : static_cast<double>(m) * m);
    // Averages are clamped to the data range so constant data reproduce exactly.
    auto average = [&](int i, int j) { return std::clamp(sat.cube_sum(i, j, m) * inv, lo, hi); };
    if (gr.dim() == 1) {
      avg.resize(static_cast<std::size_t>(K));
      for (int i = 0; i < K; ++i) avg[i] = average(i, 0);
      detail::window_max(avg.data(), 1, n, m, colout.data(), 1);
      for (int i = 0; i < n; ++i) best[i] = std::max(best[i], colout[i]);
      continue;
    }
    avg.resize(static_cast<std::size_t>(K) * K);
    for (int j = 0; j < K; ++j)
      for (int i = 0; i < K; ++i) avg[static_cast<std::size_t>(j) * K + i] = average(i, j);
    // rows[oy][x]: max over x-offsets of windows containing column x.
    rows.resize(static_cast<std::size_t>(K) * n);
    for (int j = 0; j < K; ++j)
      detail::window_max(avg.data() + static_cast<std::size_t>(j) * K, 1, n, m, rows.data() + static_cast<std::size_t>(j) * n, 1);
    for (int i = 0; i < n; ++i) {
      detail::window_max(rows.data() + i, static_cast<std::size_t>(n), n, m, colout.data(), 1);
      for (int j = 0; j < n; ++j) {
        double& b = best[static_cast<std::size_t>(j) * n + i];
        b = std::max(b, colout[j]);
      }
    }
  }
  return ScalarField(gr, Location::cell, std::move(best));
}

inline ScalarField maximal(const VectorField& f) { return maximal(magnitude(f)); }

/// O(lambda) = {Mg > lambda} as a union of cells; flagged as the whole space
/// when every cell qualifies.
inline std::shared_ptr<const CellUnion> level_set(const ScalarField& mg, double lambda) {
  require(lambda > 0.0, "level set: lambda must be positive");
  require(mg.location() == Location::cell, "level set: expects a cell field");
  std::vector<bool> sel(mg.size());
  bool all = true;
  for (std::size_t c = 0; c < sel.size(); ++c) {
    sel[c] = mg[c] > lambda;
    all = all && sel[c];
  }
  return std::make_shared<CellUnion>(mg.grid(), std::move(sel), all);
}

/// g = h chi + delta on the cells of the box.
inline ScalarField regularized_density(const ScalarField& h, double delta) {
  require(delta > 0.0, "regularized density: delta must be positive");
  std::vector<double> v = detail::cell_values(h);
  for (double& x : v) {
    require(x >= 0.0, "regularized density: h must be nonnegative");
    x += delta;
  }
  return ScalarField(h.grid(), Location::cell, std::move(v));
}

enum class CubeFamily { grid_aligned, dyadic };

inline std::string to_string(CubeFamily f) { return f == CubeFamily::dyadic ? "dyadic" : "grid-aligned"; }

/// Discrete A_p constant of a cell weight. For p > 1 the largest
/// (mean w)(mean w^{-1/(p-1)})^{p-1} over the cube family; for p = 1 the
/// largest Mw / w over cells.
inline MuckenhouptEstimate muckenhoupt_constant(const Weight& w, double p, CubeFamily family = CubeFamily::grid_aligned) {
  require(p >= 1.0, "muckenhoupt constant: p must be >= 1");
  const Grid& g = w.grid();
  const int n = g.n();
  MuckenhouptEstimate est;
  est.p = p;
  est.family = to_string(family);
  est.value = 0.0;
  if (p == 1.0) {
    ScalarField mw = maximal(ScalarField(g, Location::cell, w.values()));
    if (family == CubeFamily::dyadic) {
      // Dyadic maximal function: best dyadic ancestor average.
      const detail::SummedArea sat(g, w.values());
      std::vector<double> v = w.values();
      for (int m = 2; m <= n; m *= 2)
        for (std::size_t c = 0; c < v.size(); ++c) {
          const auto ij = g.cell_ij(c);
          const int i = ij[0] / m * m, j = ij[1] / m * m;
          v[c] = std::max(v[c], sat.cube_sum(i, j, m) / (g.dim() == 1 ? m : static_cast<double>(m) * m));
        }
      mw = ScalarField(g, Location::cell, std::move(v));
    }
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      const double r = mw[c] / w[c];
      if (r > est.value) {
        est.value = r;
        est.argmax = g.cell_box(c);
      }
    }
    return est;
  }
  std::vector<double> sigma(w.values().size());
  for (std::size_t c = 0; c < sigma.size(); ++c) sigma[c] = std::pow(w[c], -1.0 / (p - 1.0));
  const detail::SummedArea sw(g, w.values()), ss(g, sigma);
  for (int m = 1; m <= n; m = family == CubeFamily::dyadic ? 2 * m : m + 1) {
    const int K = n - m + 1;
    const int step = family == CubeFamily::dyadic ? m : 1;
    const double inv = 1.0 / (g.dim() == 1 ? m : static_cast<double>(m) * m);
    for (int j = 0; j < (g.dim() == 2 ? K : 1); j += step)
      for (int i = 0; i < K; i += step) {
        const double aw = sw.cube_sum(i, j, m) * inv;
        const double as = ss.cube_sum(i, j, m) * inv;
        const double v = aw * std::pow(as, p - 1.0);
        if (v > est.value) {
          est.value = v;
          est.argmax = detail::cube_box(g, i, j, m);
        }
      }
  }
  return est;
}

/// w = (M(|f| + 1))^{q - p}, with its A_p estimate attached when requested.
inline Weight estimate_weight(const VectorField& f, double p, double q, bool with_ap = true) {
  require(q > 1.0 && q <= p, "estimate weight: need 1 < q <= p");
  const Grid& g = f.grid();
  std::vector<double> v(g.cell_count());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = f.magnitude(c) + 1.0;
  const ScalarField m = maximal(ScalarField(g, Location::cell, std::move(v)));
  std::vector<double> w(g.cell_count());
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = q == p ? 1.0 : std::pow(m[c], q - p);
  std::ostringstream desc;
  desc << "(M(|f|+1))^" << (q - p);
  Weight out(g, std::move(w), desc.str());
  if (with_ap) out.set_muckenhoupt(muckenhoupt_constant(out, p));
  return out;
}

inline nlohmann::json box_json(const Box& b) {
  nlohmann::json j;
  j["lo"] = std::vector<double>(b.lo.begin(), b.lo.begin() + b.dim);
  j["hi"] = std::vector<double>(b.hi.begin(), b.hi.begin() + b.dim);
  return j;
}

/// {p, family, A_p, argmax}.
inline nlohmann::json ap_report_json(const MuckenhouptEstimate& est) {
  return {{"p", est.p}, {"family", est.family}, {"A_p", est.value}, {"argmax", box_json(est.argmax)}};
}

}  // namespace vws

#endif  // VWS_MAXIMAL_HPP
