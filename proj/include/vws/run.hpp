#ifndef VWS_RUN_HPP
#define VWS_RUN_HPP

// Executes a RunSpec: truncation sweep, estimate reports, level-set test
// checks, and the artifacts of a run directory.

#include <filesystem>
#include <fstream>

#include "vws/config.hpp"
#include "vws/estimates.hpp"
#include "vws/io.hpp"
#include "vws/truncation.hpp"

namespace vws {

struct RunOptions {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::ostream* log = nullptr;
};

struct RunOutcome {
  /// 0 on success, 2 when a solve failed (partial artifacts are kept).
  int status = 0;
  nlohmann::json summary;
  std::filesystem::path out_dir;
};

inline VectorField build_rhs(const RunSpec& s, const Grid& g) {
  switch (s.rhs) {
    case RhsKind::singular: {
      SingularRHS r;
      r.center = s.center;
      r.beta = s.beta;
      r.radial = s.radial;
      r.direction = s.direction;
      return r.sample(g);
    }
    case RhsKind::manufactured: return ManufacturedSolution::rhs(g);
    case RhsKind::zero: return VectorField(g, 1);
    case RhsKind::file: {
      std::ifstream is(s.rhs_file, std::ios::binary);
      if (!is) throw SpecError("rhs.file: cannot open '" + s.rhs_file + "'");
      VectorField f = io::read_vector_field(is);
      require(f.grid() == g && f.targets() == 1, "rhs.file: field does not match grid.dim / grid.n");
      return f;
    }
  }
  throw SpecError("unknown rhs kind");
}

/// Column documentation written next to the data as schema.csv.
inline const std::vector<std::array<std::string, 3>>& run_schema() {
  static const std::vector<std::array<std::string, 3>> rows{
      {"reports.csv", "estimate", "apri1 | apri2 | apri3 | apriori"},
      {"reports.csv", "p", "flux exponent"},
      {"reports.csv", "q", "integrability exponent of the estimate"},
      {"reports.csv", "epsilon", "p - q"},
      {"reports.csv", "k", "truncation level of the data (0 = untruncated)"},
      {"reports.csv", "delta", "regularization of h in the apriori weight (0 otherwise)"},
      {"reports.csv", "beta", "singular data strength (0 for other data)"},
      {"reports.csv", "d", "dimension"},
      {"reports.csv", "n", "cells per axis"},
      {"reports.csv", "lhs", "left-hand side of the estimate"},
      {"reports.csv", "rhs", "right-hand side of the estimate"},
      {"reports.csv", "constant", "implied constant lhs / rhs"},
      {"constant_vs_k.csv", "estimate", "estimate name"},
      {"constant_vs_k.csv", "q", "integrability exponent"},
      {"constant_vs_k.csv", "delta", "apriori regularization (0 otherwise)"},
      {"constant_vs_k.csv", "k", "truncation level"},
      {"constant_vs_k.csv", "constant", "implied constant lhs / rhs"},
      {"constant_vs_q.csv", "estimate", "estimate name"},
      {"constant_vs_q.csv", "delta", "apriori regularization (0 otherwise)"},
      {"constant_vs_q.csv", "q", "integrability exponent"},
      {"constant_vs_q.csv", "constant", "implied constant at the last completed level"},
      {"sequence.csv", "k", "truncation level"},
      {"sequence.csv", "q", "integrability exponent"},
      {"sequence.csv", "data_p", "int |f^k|^p"},
      {"sequence.csv", "data_q", "int |f^k|^q"},
      {"sequence.csv", "grad_lq", "||grad u^k||_{L^q}"},
      {"sequence.csv", "grad_lp", "||grad u^k||_{L^p}"},
      {"sequence.csv", "step_lq", "||grad (u^k - u^{k-1})||_{L^q} (empty on the first level)"},
      {"sequence.csv", "iterations", "solver iterations at this level"},
      {"sequence.csv", "residual", "dual norm of the final weak residual"},
      {"sequence.csv", "tolerance", "residual tolerance of the solve"},
      {"chain.csv", "k", "truncation level"},
      {"chain.csv", "q", "integrability exponent"},
      {"chain.csv", "lhs", "int |grad u|^q"},
      {"chain.csv", "weighted", "int |grad u|^p W^{q-p}, W = M(|f|+1)"},
      {"chain.csv", "weight_power", "int W^q"},
      {"chain.csv", "c1", "q / p"},
      {"chain.csv", "c2", "(p - q) / p"},
      {"chain.csv", "rhs", "c1 weighted + c2 weight_power"},
      {"chain.csv", "holds", "1 if lhs <= rhs"},
      {"levelsets.csv", "quantile", "quantile of Mg defining lambda"},
      {"levelsets.csv", "lambda", "level of O = {Mg > lambda}, g = |f^k| at the last level"},
      {"levelsets.csv", "cubes", "cubes in the Whitney cover of O"},
      {"levelsets.csv", "stability", "int |grad (u - u_O)|^p / int_O |grad u|^p"},
      {"levelsets.csv", "weak_residual", "weak residual tested with u_O"},
      {"levelsets.csv", "bound", "tolerance times ||grad u_O||_{L^p}"},
      {"history_k*.csv", "stage", "regularization stage"},
      {"history_k*.csv", "iter", "iteration within the stage"},
      {"history_k*.csv", "energy", "regularized energy (or residual merit for non-variational fluxes)"},
      {"history_k*.csv", "residual", "dual norm of the regularized residual"},
      {"history_k*.csv", "mu", "regularization"},
      {"history_k*.csv", "step", "accepted step length"},
  };
  return rows;
}

namespace detail {

inline std::string level_tag(double k) {
  std::ostringstream os;
  os << k;
  return os.str();
}

inline void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fn,
                       bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  fn(os);
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

/// |b / a - 1|, taken as 0 when both vanish.
inline double relative_change(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(b / a - 1.0);
}

struct LevelSetCheck {
  double quantile = 0.0, lambda = 0.0;
  std::size_t cubes = 0;
  double stability = 0.0, residual = 0.0, bound = 0.0;
};

}  // namespace detail

inline RunOutcome run(RunSpec spec, const RunOptions& opt = {}) {
  if (opt.out) spec.out = *opt.out;
  if (opt.seed) spec.seed = *opt.seed;
  if (opt.threads) spec.threads = *opt.threads;
  spec.solver.seed = spec.seed;
  auto say = [&](const std::string& msg) {
    if (opt.log) *opt.log << msg << std::endl;
  };

  RunOutcome outcome;
  outcome.out_dir = spec.out;
  std::filesystem::create_directories(outcome.out_dir);
  const auto& dir = outcome.out_dir;

  const Grid g(spec.dim, spec.n);
  const FluxPtr flux = make_flux(spec.flux, spec.dim, 1, spec.flux_params);
  const double p = flux->p();
  const VectorField f = build_rhs(spec, g);
  const double beta = spec.rhs == RhsKind::singular ? spec.beta : 0.0;

  nlohmann::json& sum = outcome.summary;
  sum["spec_hash"] = fnv1a_hex(canonical_spec(spec));
  sum["seed"] = spec.seed;
  sum["grid"] = {{"d", spec.dim}, {"n", spec.n}};
  sum["flux"] = {{"model", spec.flux}, {"p", p}, {"C1", flux->c1()}, {"C2", flux->c2()}, {"C3", flux->c3()}};
  sum["rhs"] = to_string(spec.rhs);

  // Sweep.
  ApproximationSequence seq;
  if (spec.levels.empty()) {
    try {
      seq.levels.push_back({0.0, f, solve(*flux, f, spec.solver)});
    } catch (const SolverError& e) {
      seq.failure = e.what();
      seq.failed_partial = e.partial();
    }
  } else {
    seq = run_sequence(*flux, f, spec.levels, spec.solver);
  }
  for (const auto& lv : seq.levels) {
    std::ostringstream os;
    os << "level k=" << lv.k << ": " << lv.result.iterations << " iterations, residual " << lv.result.residual;
    say(os.str());
    const std::string tag = detail::level_tag(lv.k);
    detail::write_file(dir / ("history_k" + tag + ".csv"), [&](std::ostream& o) { write_history_csv(o, lv.result); });
    if (spec.snapshots) {
      detail::write_file(dir / ("u_k" + tag + ".vwsf"), [&](std::ostream& o) { io::write_binary(o, lv.result.u); }, true);
      detail::write_file(dir / ("f_k" + tag + ".vwsf"), [&](std::ostream& o) { io::write_binary(o, lv.f_k); }, true);
    }
  }
  if (seq.failure) {
    outcome.status = 2;
    sum["status"] = "solver_failure";
    sum["failure"] = *seq.failure;
    say("solve failed: " + *seq.failure);
    if (seq.failed_partial) {
      detail::write_file(dir / "history_failed.csv", [&](std::ostream& o) { write_history_csv(o, *seq.failed_partial); });
      if (spec.snapshots)
        detail::write_file(dir / "u_failed.vwsf", [&](std::ostream& o) { io::write_binary(o, seq.failed_partial->u); }, true);
    }
  } else {
    sum["status"] = "ok";
  }

  // Level-set checks on the last completed level: truncation stability and
  // the weak residual tested with u_O.
  std::vector<detail::LevelSetCheck> checks;
  std::optional<double> epsilon0;
  if (!seq.levels.empty()) {
    const SequenceLevel& last = seq.levels.back();
    const ScalarField mg = maximal(last.f_k);
    for (double qt : {0.25, 0.5, 0.75}) {
      detail::LevelSetCheck ck;
      ck.quantile = qt;
      ck.lambda = quantile(mg.values(), qt);
      if (!(ck.lambda > 0.0)) continue;
      const auto mask = level_set(mg, ck.lambda);
      if (mask->is_whole_space() || mask->is_empty()) continue;
      const WhitneyCover cover = whitney_decompose(*mask, default_max_level(g));
      if (cover.empty()) continue;
      const PartitionOfUnity pou(cover);
      const SobolevFunction uo = relative_truncate(last.result.u, *mask, cover, pou);
      ck.cubes = cover.size();
      ck.stability = stability_ratio(last.result.u, uo, cover, p).ratio;
      ck.residual = weak_residual(*flux, last.result.u, last.f_k, uo);
      ck.bound = last.result.tolerance * lp_norm(gradient(uo), p);
      checks.push_back(ck);
    }
    double cstab = 0.0;
    for (const auto& ck : checks) cstab = std::max(cstab, ck.stability);
    nlohmann::json jc = nlohmann::json::array();
    bool e1 = true;
    for (const auto& ck : checks) {
      e1 = e1 && std::abs(ck.residual) <= ck.bound;
      jc.push_back({{"quantile", ck.quantile}, {"lambda", ck.lambda}, {"stability", ck.stability},
                    {"weak_residual", ck.residual}, {"bound", ck.bound}});
    }
    sum["level_sets"] = jc;
    if (!checks.empty()) sum["verdicts"]["weak_form_test"] = {{"pass", e1}};
    if (cstab > 0.0 && std::isfinite(cstab)) {
      const EpsilonRange er = epsilon_zero(flux->c1(), flux->c2(), p, cstab);
      epsilon0 = er.epsilon0;
      sum["constants"]["stability"] = cstab;
      sum["constants"]["epsilon0"] = er.epsilon0;
      sum["constants"]["epsilon_cap"] = er.cap;
    }
  }
  detail::write_file(dir / "levelsets.csv", [&](std::ostream& o) {
    o << std::setprecision(17) << "quantile,lambda,cubes,stability,weak_residual,bound\n";
    for (const auto& ck : checks)
      o << ck.quantile << ',' << ck.lambda << ',' << ck.cubes << ',' << ck.stability << ',' << ck.residual << ','
        << ck.bound << '\n';
  });

  // Reports, evaluated concurrently per level into fixed slots.
  auto wants = [&](const char* name) { return std::find(spec.reports.begin(), spec.reports.end(), name) != spec.reports.end(); };
  const bool apri3_ok = flux->c3() == 0.0;
  if (wants("apri3") && !apri3_ok) sum["warnings"].push_back("apri3 skipped: the flux has C3 > 0");
  std::vector<std::vector<EstimateReport>> reports(seq.levels.size());
  std::vector<std::vector<ChainReport>> chains(seq.levels.size());
  parallel_for(seq.levels.size(), spec.threads, [&](std::size_t i) {
    const SequenceLevel& lv = seq.levels[i];
    const SobolevFunction& u = lv.result.u;
    EstimateContext ctx{flux->c1(), flux->c2(), flux->c3(), lv.k, beta};
    const ScalarField h = magnitude(lv.f_k);
    bool h_nonzero = false;
    for (double v : h.values()) h_nonzero = h_nonzero || v > 0.0;
    for (double q : spec.q) {
      if (wants("apri1")) reports[i].push_back(apri1_report(u, lv.f_k, q, ctx));
      if (wants("apri2")) reports[i].push_back(apri2_report(u, lv.f_k, p, q, ctx));
      if (wants("apri3") && apri3_ok) reports[i].push_back(apri3_report(u, lv.f_k, p, q, ctx));
      if (wants("apriori") && h_nonzero)
        for (double delta : spec.deltas) reports[i].push_back(apriori_report(u, lv.f_k, h, p, p - q, delta, ctx, epsilon0));
      chains[i].push_back(chain_check(u, lv.f_k, p, q));
    }
  });

  detail::write_file(dir / "reports.csv", [&](std::ostream& o) {
    write_report_csv_header(o);
    for (const auto& rs : reports)
      for (const auto& r : rs) write_report_csv_row(o, r);
  });
  // Plot data: constants along the ladder, and across q at the top level.
  detail::write_file(dir / "constant_vs_k.csv", [&](std::ostream& o) {
    o << std::setprecision(17) << "estimate,q,delta,k,constant\n";
    for (const auto& rs : reports)
      for (const auto& r : rs) o << to_string(r.kind) << ',' << r.q << ',' << r.delta << ',' << r.k << ',' << r.constant << '\n';
  });
  detail::write_file(dir / "constant_vs_q.csv", [&](std::ostream& o) {
    o << std::setprecision(17) << "estimate,delta,q,constant\n";
    if (!reports.empty())
      for (const auto& r : reports.back()) o << to_string(r.kind) << ',' << r.delta << ',' << r.q << ',' << r.constant << '\n';
  });
  detail::write_file(dir / "chain.csv", [&](std::ostream& o) {
    o << std::setprecision(17) << "k,q,lhs,weighted,weight_power,c1,c2,rhs,holds\n";
    for (std::size_t i = 0; i < chains.size(); ++i)
      for (const auto& c : chains[i])
        o << seq.levels[i].k << ',' << c.q << ',' << c.lhs << ',' << c.weighted << ',' << c.weight_power << ',' << c.c1
          << ',' << c.c2 << ',' << c.rhs << ',' << c.holds << '\n';
  });

  // Per-level integrals.
  std::map<double, std::vector<double>> data_q;
  std::vector<double> data_p;
  detail::write_file(dir / "sequence.csv", [&](std::ostream& o) {
    o << std::setprecision(17) << "k,q,data_p,data_q,grad_lq,grad_lp,step_lq,iterations,residual,tolerance\n";
    for (std::size_t i = 0; i < seq.levels.size(); ++i) {
      const SequenceLevel& lv = seq.levels[i];
      const VectorField gu = gradient(lv.result.u);
      const double ip = std::pow(lp_norm(lv.f_k, p), p);
      data_p.push_back(ip);
      for (double q : spec.q) {
        const double iq = std::pow(lp_norm(lv.f_k, q), q);
        data_q[q].push_back(iq);
        o << lv.k << ',' << q << ',' << ip << ',' << iq << ',' << lp_norm(gu, q) << ',' << lp_norm(gu, p) << ',';
        if (i > 0) o << lp_norm(gradient(lv.result.u - seq.levels[i - 1].result.u), q);
        o << ',' << lv.result.iterations << ',' << lv.result.residual << ',' << lv.result.tolerance << '\n';
      }
    }
  });

  // Verdicts.
  nlohmann::json& v = sum["verdicts"];
  {
    bool held = true;
    for (const auto& cs : chains)
      for (const auto& c : cs) held = held && c.holds;
    v["chain"] = {{"pass", held}};
  }
  if (seq.levels.size() >= 2) {
    for (double q : spec.q) {
      std::vector<double> cs;
      for (const auto& rs : reports)
        for (const auto& r : rs)
          if (r.kind == EstimateKind::apri2 && r.q == q) cs.push_back(r.constant);
      std::ostringstream key;
      key << "q=" << q;
      if (cs.size() >= 2) {
        const double s = spread(cs);
        v["apri2_uniformity"][key.str()] = {{"spread", s}, {"limit", 4.0}, {"pass", s <= 4.0}};
        sum["constants"]["apri2"][key.str()] = cs;
      }
      const auto& iq = data_q[q];
      const double change = detail::relative_change(iq[iq.size() - 2], iq.back());
      v["lq_stability"][key.str()] = {{"relative_change", change}, {"limit", 0.02}, {"pass", change <= 0.02}};
    }
    bool increasing = true;
    for (std::size_t i = 1; i < data_p.size(); ++i) increasing = increasing && data_p[i] > data_p[i - 1];
    const double growth = data_p.back() / data_p[data_p.size() - 2] - 1.0;
    v["lp_growth"] = {{"strictly_increasing", increasing},
                      {"last_relative_increase", growth},
                      {"required", 0.02},
                      {"pass", increasing && growth > 0.02}};
  }
  if (spec.deltas.size() >= 2) {
    bool all = true;
    double worst = 0.0;
    for (const auto& rs : reports) {
      std::map<double, std::vector<double>> by_q;
      for (const auto& r : rs)
        if (r.kind == EstimateKind::apriori) by_q[r.q].push_back(r.constant);
      for (const auto& [q, ratios] : by_q) {
        const double a = ratios[ratios.size() - 2], b = ratios.back();
        const double change = detail::relative_change(a, b);
        worst = std::max(worst, change);
        all = all && change <= 0.01;
      }
    }
    v["delta_limit"] = {{"worst_relative_change", worst}, {"limit", 0.01}, {"pass", all}};
  }
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& rs : reports)
    for (const auto& r : rs) jr.push_back(report_json(r));
  sum["reports"] = jr;

  detail::write_file(dir / "schema.csv", [&](std::ostream& o) {
    o << "file,column,description\n";
    for (const auto& row : run_schema()) o << row[0] << ',' << row[1] << ",\"" << row[2] << "\"\n";
  });
  detail::write_file(dir / "summary.json", [&](std::ostream& o) { o << sum.dump(2) << '\n'; });
  return outcome;
}

}  // namespace vws

#endif  // VWS_RUN_HPP
