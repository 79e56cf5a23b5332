#ifndef VWS_VERIFY_HPP
#define VWS_VERIFY_HPP

// Standalone property suites run by `vws verify`. Each property reports a
// pass/fail verdict with a short measured detail.

#include <functional>
#include <sstream>

#include "vws/estimates.hpp"
#include "vws/random.hpp"
#include "vws/solver.hpp"
#include "vws/truncation.hpp"

namespace vws {

struct PropertyResult {
  std::string suite;
  std::string property;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  /// Restricts the set-based suites to one named mask.
  std::optional<std::string> set;
  /// Replaces the p-Laplacian by a sign-flipped model in the flux suite.
  bool inject_fault = false;
  std::size_t points = 20000;
};

namespace detail {

class PropertyLog {
 public:
  PropertyLog(std::string suite, std::vector<PropertyResult>& out) : suite_(std::move(suite)), out_(out) {}

  void record(const std::string& property, bool passed, const std::string& detail) {
    out_.push_back({suite_, property, passed, detail});
  }

  /// Runs the check; an exception counts as a failure of that property.
  void check(const std::string& property, const std::function<std::pair<bool, std::string>()>& fn) {
    try {
      auto [ok, detail] = fn();
      record(property, ok, detail);
    } catch (const std::exception& e) {
      record(property, false, std::string("exception: ") + e.what());
    }
  }

 private:
  std::string suite_;
  std::vector<PropertyResult>& out_;
};

template <class T>
std::string show(const char* label, T value) {
  std::ostringstream os;
  os << label << '=' << value;
  return os.str();
}

inline std::vector<std::string> selected_sets(const VerifyOptions& opt) {
  if (opt.set) {
    named_mask(*opt.set);  // validates the name
    return {*opt.set};
  }
  return {"square", "disc", "square_minus_disc", "two_rectangles"};
}

inline constexpr int kVerifyLevel = 8;

}  // namespace detail

inline void verify_whitney(const VerifyOptions& opt, std::vector<PropertyResult>& out) {
  for (const auto& name : detail::selected_sets(opt)) {
    detail::PropertyLog log("whitney", out);
    const MaskPtr mask = named_mask(name);
    const WhitneyCover cover = whitney_decompose(*mask, detail::kVerifyLevel);
    const int bound = neighbor_bound(cover.dim());
    const std::string tag = name + ".";
    log.check(tag + "disjoint_interiors", [&] {
      std::size_t bad = 0;
      for (std::size_t i = 0; i < cover.size(); ++i)
        for (std::size_t j : cover.meeting(cover.cube(i).box(), 1.0))
          if (j != i && boxes_overlap(cover.cube(i).box(), cover.cube(j).box())) ++bad;
      return std::pair{bad == 0, detail::show("overlapping_pairs", bad)};
    });
    log.check(tag + "distance_ratio", [&] {
      std::size_t bad = 0;
      for (const auto& q : cover.cubes()) {
        const double dist = mask->distance_to_complement(q.box());
        if (!(dist > q.diameter() && dist <= 4.0 * q.diameter())) ++bad;
      }
      return std::pair{bad == 0, detail::show("violations", bad)};
    });
    log.check(tag + "level_jump", [&] {
      int worst = 0;
      for (std::size_t i = 0; i < cover.size(); ++i)
        for (std::size_t j : cover.neighbors(i)) worst = std::max(worst, std::abs(cover.cube(i).level - cover.cube(j).level));
      return std::pair{worst <= 1, detail::show("max_jump", worst)};
    });
    log.check(tag + "neighbor_count", [&] {
      std::size_t worst = 0;
      for (std::size_t i = 0; i < cover.size(); ++i) worst = std::max(worst, cover.neighbors(i).size());
      return std::pair{worst <= static_cast<std::size_t>(bound), detail::show("max_neighbors", worst)};
    });
    log.check(tag + "multiplicity", [&] {
      Rng rng(opt.seed);
      std::size_t worst = 0;
      for (std::size_t k = 0; k < opt.points; ++k) worst = std::max(worst, cover.containing(random_point_in(*mask, rng), 1.5).size());
      return std::pair{worst <= static_cast<std::size_t>(bound), detail::show("max_overlap", worst)};
    });
    log.check(tag + "covers_set", [&] {
      Rng rng(opt.seed + 1);
      std::size_t missed = 0;
      for (std::size_t k = 0; k < opt.points; ++k) {
        const Point x = random_point_in(*mask, rng);
        if (!cover.containing(x, 1.0).empty()) continue;
        bool frontier = false;
        for (const auto& q : cover.frontier()) frontier = frontier || q.box().contains(x);
        if (!frontier) ++missed;
      }
      return std::pair{missed == 0, detail::show("uncovered_points", missed)};
    });
  }
}

inline void verify_partition(const VerifyOptions& opt, std::vector<PropertyResult>& out) {
  for (const auto& name : detail::selected_sets(opt)) {
    detail::PropertyLog log("pou", out);
    const MaskPtr mask = named_mask(name);
    const WhitneyCover cover = whitney_decompose(*mask, detail::kVerifyLevel);
    const PartitionOfUnity pou(cover);
    const std::string tag = name + ".";
    log.check(tag + "sums_to_one", [&] {
      Rng rng(opt.seed);
      double worst = 0.0;
      for (std::size_t k = 0; k < opt.points; ++k) {
        const Point x = random_point_in(*mask, rng);
        if (cover.containing(x, 1.0).empty()) continue;  // frontier sliver
        double s = 0.0;
        for (auto [i, v] : pou.evaluate(x)) s += v;
        worst = std::max(worst, std::abs(s - 1.0));
      }
      return std::pair{worst <= 1e-12, detail::show("max_defect", worst)};
    });
    log.check(tag + "support", [&] {
      Rng rng(opt.seed + 1);
      std::size_t bad = 0;
      for (std::size_t k = 0; k < opt.points; ++k) {
        const Point x = random_point_in(*mask, rng);
        for (auto [i, v] : pou.evaluate(x))
          if (v > 0.0 && !cover.cube(i).enlarged(2.0 * PartitionOfUnity::kOuter).contains_interior(x)) ++bad;
      }
      return std::pair{bad == 0, detail::show("outside_support", bad)};
    });
    log.check(tag + "lipschitz", [&] {
      Rng rng(opt.seed + 2);
      const double bound = pou.lipschitz_constant();
      double worst = 0.0;
      const std::size_t pts = std::min<std::size_t>(opt.points, 5000);
      for (std::size_t k = 0; k < pts; ++k) {
        const Point x = random_point_in(*mask, rng);
        for (auto [i, v] : pou.evaluate(x)) {
          const double step = 1e-6 * cover.cube(i).side();
          for (int a = 0; a < cover.dim(); ++a) {
            Point y = x;
            y[a] += step;
            worst = std::max(worst, cover.cube(i).diameter() * std::abs(pou.value(i, y) - v) / step);
          }
        }
      }
      std::ostringstream os;
      os << "max_scaled_slope=" << worst << " bound=" << bound;
      return std::pair{worst <= bound, os.str()};
    });
  }
}

inline void verify_truncation(const VerifyOptions& opt, std::vector<PropertyResult>& out) {
  for (const auto& name : detail::selected_sets(opt)) {
    detail::PropertyLog log("truncation", out);
    const MaskPtr mask = named_mask(name);
    const Grid g(2, 64);
    const WhitneyCover cover = whitney_decompose(*mask, default_max_level(g));
    const PartitionOfUnity pou(cover);
    const std::string tag = name + ".";
    Rng rng(opt.seed);
    std::vector<SobolevFunction> us, uos;
    for (int s = 0; s < 12; ++s) {
      us.push_back(random_function(g, 1, rng, 4, s % 3 == 0 ? 0.05 : 0.0));
      uos.push_back(relative_truncate(us.back(), *mask, cover, pou));
    }
    log.check(tag + "zero_trace", [&] {
      bool ok = true;
      for (const auto& v : uos) ok = ok && v.trace_is_zero();
      return std::pair{ok, std::string(ok ? "all traces zero" : "nonzero trace")};
    });
    log.check(tag + "unchanged_outside", [&] {
      std::size_t bad = 0;
      for (std::size_t s = 0; s < us.size(); ++s)
        for (std::size_t k = 0; k < g.node_count(); ++k)
          if (!mask->contains(g.node_point(k)) && us[s].at(k, 0) != uos[s].at(k, 0)) ++bad;
      return std::pair{bad == 0, detail::show("changed_nodes", bad)};
    });
    log.check(tag + "uniform_stability", [&] {
      std::vector<double> ratios;
      for (std::size_t s = 0; s < us.size(); ++s) ratios.push_back(stability_ratio(us[s], uos[s], cover, 2.0).ratio);
      const double med = quantile(ratios, 0.5);
      const double mx = *std::max_element(ratios.begin(), ratios.end());
      std::ostringstream os;
      os << "max=" << mx << " median=" << med;
      return std::pair{std::isfinite(mx) && mx <= 10.0 * med, os.str()};
    });
  }
}

inline void verify_maximal(const VerifyOptions& opt, std::vector<PropertyResult>& out) {
  detail::PropertyLog log("maximal", out);
  Rng rng(opt.seed);
  for (int d : {1, 2}) {
    const Grid g(d, d == 1 ? 256 : 32);
    const std::string tag = "d" + std::to_string(d) + ".";
    log.check(tag + "dominates", [&] {
      std::size_t bad = 0;
      for (int s = 0; s < 5; ++s) {
        const ScalarField c = magnitude(random_field(g, 1, rng));
        const ScalarField m = maximal(c);
        for (std::size_t k = 0; k < c.size(); ++k) bad += m[k] < c[k];
      }
      return std::pair{bad == 0, detail::show("cells_below", bad)};
    });
    log.check(tag + "constant_exact", [&] {
      const ScalarField m = maximal(ScalarField(g, Location::cell, std::vector<double>(g.cell_count(), 0.3)));
      std::size_t bad = 0;
      for (double v : m.values()) bad += v != 0.3;
      return std::pair{bad == 0, detail::show("inexact_cells", bad)};
    });
    log.check(tag + "unit_weight_ap", [&] {
      const Weight w(g, std::vector<double>(g.cell_count(), 1.0), "1");
      const double a2 = muckenhoupt_constant(w, 2.0).value, a1 = muckenhoupt_constant(w, 1.0).value;
      std::ostringstream os;
      os << "A2=" << a2 << " A1=" << a1;
      return std::pair{a2 == 1.0 && a1 == 1.0, os.str()};
    });
  }
}

inline void verify_flux(const VerifyOptions& opt, std::vector<PropertyResult>& out) {
  detail::PropertyLog log("flux", out);
  for (const std::string name : {"p_laplacian", "anisotropic", "skew"}) {
    for (double p : {1.5, 3.0}) {
      if (name == "skew" && p < 2.0) continue;
      const std::string model = opt.inject_fault && name == "p_laplacian" ? "negated" : name;
      const FluxPtr s = make_flux(model, 2, 1, {{"p", p}});
      const AssumptionReport rep = verify_assumptions(*s, 20000, opt.seed);
      std::ostringstream tag;
      tag << model << ".p" << p << ".";
      log.record(tag.str() + "coercivity (A1)", rep.coercivity_ok(), detail::show("margin", rep.coercivity_margin));
      log.record(tag.str() + "growth (A2)", rep.growth_ok(), detail::show("margin", rep.growth_margin));
      log.record(tag.str() + "monotonicity (A3)", rep.monotonicity_ok(), detail::show("margin", rep.monotonicity_margin));
    }
  }
}

inline void verify_solver(const VerifyOptions& opt, std::vector<PropertyResult>& out) {
  detail::PropertyLog log("solver", out);
  Rng rng(opt.seed);
  const Grid g(1, 256);
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    std::ostringstream tag;
    tag << "oracle.p" << p;
    log.check(tag.str(), [&] {
      const VectorField f = random_field(g, 1, rng);
      const FluxPtr s = make_flux("p_laplacian", 1, 1, {{"p", p}});
      const SolveResult r = solve(*s, f, SolverConfig{});
      const SobolevFunction o = oracle_1d(p, f);
      const double err = lp_norm(gradient(r.u - o), p) / lp_norm(gradient(o), p);
      return std::pair{err <= 1e-3, detail::show("relative_error", err)};
    });
  }
  log.check("energy_gradient", [&] {
    const Grid g2(2, 16);
    const FluxPtr s = make_flux("anisotropic", 2, 1, {{"p", 3.0}});
    const EnergyFunctional j(*s, random_field(g2, 1, rng));
    const Eigen::Index m = static_cast<Eigen::Index>(j.discretization().dofs());
    std::normal_distribution<double> nd;
    Eigen::VectorXd x(m), dir(m);
    for (Eigen::Index k = 0; k < m; ++k) x[k] = nd(rng);
    double worst = 0.0;
    const Eigen::VectorXd grad = j.gradient(x, 1.0);
    for (int t = 0; t < 10; ++t) {
      for (Eigen::Index k = 0; k < m; ++k) dir[k] = nd(rng);
      const double eps = 1e-5;
      const double fd = (j.energy(x + eps * dir, 1.0) - j.energy(x - eps * dir, 1.0)) / (2 * eps);
      const double an = grad.dot(dir);
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-300));
    }
    return std::pair{worst <= 1e-5, detail::show("max_relative_mismatch", worst)};
  });
}

inline void verify_estimates(const VerifyOptions& opt, std::vector<PropertyResult>& out) {
  detail::PropertyLog log("estimates", out);
  Rng rng(opt.seed);
  log.check("chain_random_pairs", [&] {
    std::uniform_real_distribution<double> qd(1.2, 3.0);
    int held = 0;
    for (int s = 0; s < 20; ++s) {
      const Grid g(2, 16);
      const double q = qd(rng);
      const ChainReport r = chain_check(random_function(g, 1, rng, 5, 0.1), random_field(g, 1, rng, 3.0), 3.0, q);
      held += r.holds;
    }
    return std::pair{held == 20, detail::show("held", held)};
  });
  log.check("epsilon_scaling", [&] {
    const double base = epsilon_zero(1.0, 1.0, 3.0, 2.0).epsilon0;
    const double twice_c1 = epsilon_zero(2.0, 1.0, 3.0, 2.0).epsilon0;
    const double twice_c2 = epsilon_zero(1.0, 2.0, 3.0, 2.0).epsilon0;
    const double err = std::abs(twice_c1 / base - 2.0) + std::abs(base / twice_c2 - std::pow(2.0, 1.5));
    return std::pair{err <= 1e-12, detail::show("scaling_error", err)};
  });
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"whitney", "pou", "truncation", "maximal", "flux", "solver", "estimates"};
  return names;
}

/// Runs one suite by name, or all of them for an empty name.
inline std::vector<PropertyResult> run_verify(const std::string& suite, const VerifyOptions& opt) {
  std::vector<PropertyResult> out;
  const std::map<std::string, void (*)(const VerifyOptions&, std::vector<PropertyResult>&)> table{
      {"whitney", verify_whitney}, {"pou", verify_partition}, {"truncation", verify_truncation},
      {"maximal", verify_maximal}, {"flux", verify_flux},      {"solver", verify_solver},
      {"estimates", verify_estimates}};
  if (suite.empty()) {
    for (const auto& name : suite_names()) table.at(name)(opt, out);
    return out;
  }
  auto it = table.find(suite);
  if (it == table.end()) throw InvalidArgument("unknown verify suite: " + suite);
  it->second(opt, out);
  return out;
}

}  // namespace vws

#endif  // VWS_VERIFY_HPP
