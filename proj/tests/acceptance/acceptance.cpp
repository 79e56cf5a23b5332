// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "oracles.hpp"

using namespace vws;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

const std::vector<std::string> kSets{"square", "disc", "square_minus_disc", "two_rectangles"};

std::size_t failures(const std::vector<PropertyResult>& rs, std::string& detail) {
  std::size_t bad = 0;
  for (const auto& r : rs)
    if (!r.passed) {
      ++bad;
      detail += " [" + r.property + ": " + r.detail + "]";
    }
  return bad;
}

Outcome whitney_cover() {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyOptions opt;
  opt.points = 100000;
  std::string detail;
  std::size_t bad = failures(run_verify("whitney", opt), detail);
  // Distance ratio again against the closed-form distances.
  std::size_t cubes = 0;
  for (const auto& name : kSets) {
    const WhitneyCover cover = whitney_decompose(*named_mask(name), detail::kVerifyLevel);
    cubes += cover.size();
    for (const auto& q : cover.cubes()) {
      const double dist = oracle::named_distance(name, q.box());
      if (!(dist > q.diameter() && dist <= 4.0 * q.diameter())) {
        ++bad;
        detail += " [" + name + ": oracle distance ratio]";
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > 60.0) ++bad;
  return {bad == 0, std::to_string(cubes) + " cubes over 4 sets, violations " + std::to_string(bad) + ", " + fmt(secs) +
                        " s (limit 60)" + detail};
}

Outcome partition_of_unity() {
  VerifyOptions opt;
  opt.points = 100000;
  std::string detail;
  const auto rs = run_verify("pou", opt);
  const std::size_t bad = failures(rs, detail);
  return {bad == 0, std::to_string(rs.size()) + " properties, violations " + std::to_string(bad) + ", c(2) = " +
                        fmt(PartitionOfUnity::lipschitz_constant(2)) + detail};
}

MaskPtr random_set(int d, Rng& rng, int trial) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_box = [&] {
    Box b{d, {0, 0}, {0, 0}};
    for (int a = 0; a < d; ++a) {
      const double lo = 0.8 * u(rng), len = 0.1 + 0.4 * u(rng);
      b.lo[a] = lo;
      b.hi[a] = std::min(1.0, lo + len);
    }
    return b;
  };
  switch (trial % 3) {
    case 0: {
      std::vector<Box> boxes;
      const int count = 1 + static_cast<int>(3 * u(rng));
      for (int i = 0; i < count; ++i) boxes.push_back(random_box());
      return box_union_mask(d, boxes);
    }
    case 1:
      return ball_mask(d, {0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng)}, 0.1 + 0.3 * u(rng));
    default:
      return cube_minus_ball_mask(d, {0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng)}, 0.1 + 0.3 * u(rng));
  }
}

Outcome truncation_stability() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::ostringstream os;
  for (int d : {1, 2}) {
    const Grid g(d, d == 1 ? 512 : 64);
    for (double p : {1.5, 2.0, 3.0}) {
      Rng rng(1000 * d + static_cast<int>(10 * p));
      std::vector<double> ratios;
      for (int t = 0; t < 200; ++t) {
        const MaskPtr mask = random_set(d, rng, t);
        const SobolevFunction u = random_function(g, 1, rng, 4, t % 4 == 0 ? 0.02 : 0.0);
        const WhitneyCover cover = whitney_decompose(*mask, default_max_level(g));
        if (cover.empty()) continue;
        const PartitionOfUnity pou(cover);
        const auto r = stability_ratio(u, relative_truncate(u, *mask, cover, pou), cover, p);
        if (r.rhs > 0.0) ratios.push_back(r.ratio);
      }
      const double med = quantile(ratios, 0.5);
      const double mx = *std::max_element(ratios.begin(), ratios.end());
      const bool pass = std::isfinite(mx) && mx <= 10.0 * med && ratios.size() >= 190;
      ok = ok && pass;
      os << " d=" << d << ",p=" << p << ": max/median " << fmt(mx / med) << " (" << ratios.size() << " pairs)";
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs <= 300.0;
  os << "; " << fmt(secs) << " s (limit 300)";
  return {ok, "limit 10 per class;" + os.str()};
}

Outcome solver_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  SolverConfig cfg;
  cfg.verify_samples = 2000;
  // (i) 1D closed form.
  double worst = 0.0;
  {
    const Grid g(1, 1024);
    Rng rng(41);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
      const FluxPtr s = make_flux("p_laplacian", 1, 1, {{"p", p}});
      for (int t = 0; t < 20; ++t) {
        const VectorField f = sample_cells(g, 1, [&](const Point&, std::span<double> out) { out[0] = ud(rng); });
        const SobolevFunction u = solve(*s, f, cfg).u;
        const SobolevFunction o = oracle_1d(p, f);
        worst = std::max(worst, lp_norm(gradient(u - o), p) / lp_norm(gradient(o), p));
      }
    }
  }
  // (ii) manufactured solution; the error is measured in the discrete
  // gradient norm against the nodal interpolant of the exact solution.
  std::ostringstream orders;
  double min_order = std::numeric_limits<double>::infinity();
  for (double p : {2.0, 3.0}) {
    std::vector<double> hs, nodal, continuum;
    for (int n : {32, 64, 128}) {
      const Grid g(2, n);
      const SobolevFunction u =
          solve(*make_flux("p_laplacian", 2, 1, {{"p", p}}), ManufacturedSolution::rhs(g), cfg).u;
      hs.push_back(g.h());
      nodal.push_back(lp_norm(gradient(u - ManufacturedSolution::exact(g)), p));
      continuum.push_back(std::pow(oracle::interpolant_error(u, [](const Point& x) {
        return Point{M_PI * std::cos(M_PI * x[0]) * std::sin(M_PI * x[1]), M_PI * std::sin(M_PI * x[0]) * std::cos(M_PI * x[1])};
      }, p), 1.0 / p));
    }
    const double o = oracle::convergence_order(hs, nodal);
    min_order = std::min(min_order, o);
    orders << " p=" << p << ": " << fmt(o) << " (continuum gradient " << fmt(oracle::convergence_order(hs, continuum)) << ")";
  }
  // (iii) energy gradient.
  double grad_err = 0.0;
  {
    const Grid g(2, 8);
    Rng rng(43);
    const VectorField f = random_field(g, 1, rng);
    for (double p : {1.5, 3.0}) {
      const EnergyFunctional j(*make_flux("p_laplacian", 2, 1, {{"p", p}}), f);
      const Eigen::VectorXd x = j.discretization().restrict(random_function(g, 1, rng));
      const double mu = 1e-2;
      const Eigen::VectorXd an = j.gradient(x, mu);
      Eigen::VectorXd fd(an.size());
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        const double e = 1e-6;
        xp[k] += e;
        xm[k] -= e;
        fd[k] = (j.energy(xp, mu) - j.energy(xm, mu)) / (2 * e);
      }
      grad_err = std::max(grad_err, (an - fd).norm() / an.norm());
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = worst <= 1e-3 && min_order >= 1.0 && grad_err <= 1e-5 && secs <= 900.0;
  return {ok, "(i) worst relative gradient error " + fmt(worst) + " (limit 1e-3); (ii) order" + orders.str() +
                  " (limit 1.0); (iii) gradient mismatch " + fmt(grad_err) + " (limit 1e-5); " + fmt(secs) + " s"};
}

Outcome apri2_uniformity() {
  const auto t0 = std::chrono::steady_clock::now();
  RunSpec spec = load_spec(std::string(VWS_PRESET_DIR) + "/theorem2_sweep.ini");
  RunOptions opt;
  opt.out = "acceptance_theorem2";
  const RunOutcome out = run(spec, opt);
  if (out.status != 0) return {false, "sweep failed: " + out.summary.value("failure", std::string("?"))};
  const double p = spec.p(), q = 2.8;
  const auto cs = out.summary["constants"]["apri2"]["q=2.8"].get<std::vector<double>>();
  const double s = spread(cs);
  // Data integrals recomputed from the sampled magnitudes.
  const Grid g(spec.dim, spec.n);
  const VectorField f = build_rhs(spec, g);
  std::vector<double> ip, iq;
  double fmax = 0.0;
  for (std::size_t c = 0; c < f.cell_count(); ++c) fmax = std::max(fmax, f.magnitude(c));
  for (double k : spec.levels) {
    double a = 0.0, b = 0.0;
    for (std::size_t c = 0; c < f.cell_count(); ++c) {
      const double r = std::min(k, f.magnitude(c));
      a += std::pow(r, p);
      b += std::pow(r, q);
    }
    ip.push_back(a * g.cell_volume());
    iq.push_back(b * g.cell_volume());
  }
  bool increasing = true;
  for (std::size_t i = 1; i < ip.size(); ++i) increasing = increasing && ip[i] > ip[i - 1];
  const double growth = ip.back() / ip[ip.size() - 2] - 1.0;
  const double qchange = std::abs(iq.back() / iq[iq.size() - 2] - 1.0);
  const bool uniform = s <= 4.0, blowup = increasing && growth > 0.02, stable = qchange <= 0.02;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream os;
  os << "apri2 max/min " << fmt(s) << " (limit 4) " << (uniform ? "ok" : "FAIL") << "; int|f^k|^p "
     << (increasing ? "increasing" : "not strictly increasing") << ", last rise " << fmt(100 * growth) << "% (need > 2%) "
     << (blowup ? "ok" : "FAIL") << "; int|f^k|^q last change " << fmt(100 * qchange) << "% (limit 2%) "
     << (stable ? "ok" : "FAIL") << "; max|f| on the grid " << fmt(fmax) << "; " << fmt(secs) << " s (limit 1800)";
  return {uniform && blowup && stable && secs <= 1800.0, os.str()};
}

Outcome chain() {
  Rng rng(61);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::size_t bad = 0;
  double tightest = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 100; ++t) {
    const int d = t % 2 ? 2 : 1;
    const Grid g(d, d == 2 ? 32 : 256);
    const double p = 1.5 + 2.5 * ud(rng);
    const double q = 1.0 + (p - 1.0) * (0.05 + 0.95 * ud(rng));
    const SobolevFunction u = random_function(g, 1, rng, 4, 0.05 * ud(rng));
    const VectorField f = random_field(g, 1, rng, 10.0 * ud(rng));
    try {
      const ChainReport r = chain_check(u, f, p, q, 1e-10);
      tightest = std::min(tightest, r.rhs / r.lhs);
    } catch (const NumericalError&) {
      ++bad;
    }
  }
  return {bad == 0, "100 pairs, violations " + std::to_string(bad) + ", smallest rhs/lhs " + fmt(tightest)};
}

Outcome maximal_weights() {
  Rng rng(71);
  std::size_t below = 0, inexact = 0;
  for (int d : {1, 2}) {
    const Grid g(d, d == 1 ? 512 : 64);
    for (int t = 0; t < 10; ++t) {
      const ScalarField c = magnitude(random_field(g, 1, rng, 3.0));
      const ScalarField m = maximal(c);
      for (std::size_t k = 0; k < c.size(); ++k) below += m[k] < c[k];
    }
    for (double k : {0.3, 1.0, 7.0 / 3.0}) {
      const ScalarField m = maximal(ScalarField(g, Location::cell, k));
      for (double v : m.values()) inexact += v != k;
    }
  }
  std::ostringstream os;
  bool ok = below == 0 && inexact == 0;
  const Grid g(2, 32);
  std::lognormal_distribution<double> ln(0.0, 1.5);
  for (double alpha : {0.25, 0.5, 0.75}) {
    std::vector<double> a1;
    for (int t = 0; t < 20; ++t) {
      std::vector<double> v(g.cell_count());
      for (double& x : v) x = ln(rng);
      ScalarField m = maximal(ScalarField(g, Location::cell, v));
      for (double& x : m.values()) x = std::pow(x, alpha);
      a1.push_back(muckenhoupt_constant(Weight(g, m.values(), "Mg^a"), 1.0).value);
    }
    const double s = spread(a1);
    ok = ok && s <= 10.0;
    os << " A1 spread at alpha=" << alpha << ": " << fmt(s);
  }
  bool unit = true;
  for (int d : {1, 2})
    for (double p : {1.0, 1.5, 2.0, 3.0}) unit = unit && muckenhoupt_constant(Weight::unit(Grid(d, 32)), p).value == 1.0;
  ok = ok && unit;
  return {ok, "cells with Mg < |g|: " + std::to_string(below) + ", inexact constants: " + std::to_string(inexact) + ";" +
                  os.str() + " (limit 10); A_p(1) = 1 " + (unit ? "exactly" : "FAILED")};
}

Outcome weak_form_identity() {
  const Grid g(2, 64);
  const VectorField f = SingularRHS{}.sample(g);
  const double p = 3.0;
  const FluxPtr s = make_flux("p_laplacian", 2, 1, {{"p", p}});
  const SolveResult r = solve(*s, f, SolverConfig{});
  const ScalarField mg = maximal(f);
  bool ok = true;
  std::ostringstream os;
  for (double quart : {0.25, 0.5, 0.75}) {
    const double lambda = quantile(mg.values(), quart);
    const auto o = level_set(mg, lambda);
    const SobolevFunction uo = relative_truncate(r.u, *o, default_max_level(g));
    const double res = std::abs(weak_residual(*s, r.u, f, uo));
    const double bound = r.tolerance * lp_norm(gradient(uo), p);
    ok = ok && res <= bound;
    os << " lambda=" << fmt(lambda) << ": " << fmt(res) << " <= " << fmt(bound) << (res <= bound ? "" : " FAIL") << ";";
  }
  return {ok, "|R(u_O)| vs tol*||grad u_O||_p:" + os.str()};
}

Outcome monotone_pairing_core() {
  Rng rng(81);
  std::lognormal_distribution<double> ln(0.0, 1.0);
  const Grid g(2, 8);
  std::ostringstream os;
  bool ok = true;
  for (const std::string name : {"p_laplacian", "anisotropic", "skew"}) {
    const FluxPtr s = make_flux(name, 2, 1, {{"p", 3.0}});
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> w(g.cell_count());
      for (double& v : w) v = ln(rng);
      try {
        worst = std::min(worst, monotone_pairing(*s, random_field(g, 1, rng, 3.0), random_field(g, 1, rng, 3.0), Weight(g, w, "ln")));
      } catch (const NumericalError& e) {
        ok = false;
        os << " " << e.what();
      }
    }
    ok = ok && worst >= -1e-12;
    os << " " << name << " min " << fmt(worst) << ";";
  }
  return {ok, "1000 triples per model:" + os.str()};
}

Outcome delta_limit() {
  const Grid g(2, 64);
  const VectorField f = SingularRHS{}.sample(g);
  const double p = 3.0, eps = 0.025;
  const SolveResult r = solve(*make_flux("p_laplacian", 2, 1, {{"p", p}}), f, SolverConfig{});
  const ScalarField h = magnitude(f);
  std::vector<double> ratios;
  for (double delta : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6})
    ratios.push_back(apriori_report(r.u, f, h, p, eps, delta).constant);
  int sign = 0;
  bool monotone = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    const double dv = ratios[i] - ratios[i - 1];
    if (std::abs(dv) <= 1e-14 * ratios[i]) continue;
    const int sg = dv > 0 ? 1 : -1;
    monotone = monotone && (sign == 0 || sg == sign);
    sign = sg;
  }
  const double last = std::abs(ratios.back() / ratios[ratios.size() - 2] - 1.0);
  std::ostringstream os;
  os << "ratios";
  for (double v : ratios) os << " " << fmt(v);
  os << "; " << (monotone ? "monotone" : "not monotone") << ", last change " << fmt(100 * last) << "% (limit 1%)";
  return {monotone && last <= 0.01, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Outcome (*)()>> criteria{
      {"AC-1", whitney_cover},   {"AC-2", partition_of_unity}, {"AC-3", truncation_stability},
      {"AC-4", solver_correctness}, {"AC-5", apri2_uniformity}, {"AC-6", chain},
      {"AC-7", maximal_weights}, {"AC-8", weak_form_identity}, {"AC-9", monotone_pairing_core},
      {"AC-10", delta_limit}};
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.passed;
    std::cout << id << (o.passed ? " PASS " : " FAIL ") << o.detail << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
