#ifndef VWS_ESTIMATES_HPP
#define VWS_ESTIMATES_HPP

// Both sides of the weighted a priori estimates, the admissible epsilon
// range and the Young-inequality chain from the weighted to the plain
// L^q gradient bound.

#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "vws/maximal.hpp"

namespace vws {

/// f(x) = |x - x0|^{-beta} e(x), sampled at cell centers. The direction e is
/// radial, (x - x0)/|x - x0|, or a fixed unit vector. Lies in L^s iff beta s < d.
struct SingularRHS {
  Point center{0.5, 0.5};
  double beta = 0.7;
  bool radial = true;
  Point direction{1.0, 0.0};

  VectorField sample(const Grid& g) const {
    require(beta > 0.0, "singular rhs: beta must be positive");
    const int d = g.dim();
    Point dir = direction;
    if (!radial) {
      double r = 0.0;
      for (int a = 0; a < d; ++a) r += dir[a] * dir[a];
      require(r > 0.0, "singular rhs: zero direction");
      for (int a = 0; a < d; ++a) dir[a] /= std::sqrt(r);
    }
    return sample_cells(g, 1, [&](const Point& x, std::span<double> out) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
      const double r = std::sqrt(r2);
      require(r > 0.0, "singular rhs: center coincides with a sample point");
      const double mag = std::pow(r, -beta);
      for (int a = 0; a < d; ++a) out[a] = mag * (radial ? (x[a] - center[a]) / r : dir[a]);
    });
  }

  /// Exponent window (d/p, d/q) placing f in L^q but not L^p.
  static bool separates(double beta, int d, double p, double q) { return beta * p > d && beta * q < d; }
};

struct EpsilonRange {
  double epsilon0 = 0.0;
  /// epsilon < p - 1 keeps the weight in A_p.
  double cap = 0.0;
  double admissible() const { return std::min(epsilon0, cap); }
};

/// epsilon_0 = C1 min(p-1, 1/(p-1)) / (C2^{p'} c_omega).
inline EpsilonRange epsilon_zero(double c1, double c2, double p, double c_omega) {
  require(c1 > 0.0 && c2 > 0.0, "epsilon zero: C1 and C2 must be positive");
  require(p > 1.0 && std::isfinite(p), "epsilon zero: p must lie in (1, inf)");
  require(c_omega > 0.0 && std::isfinite(c_omega), "epsilon zero: domain constant must be positive");
  const double bar = std::min(p - 1.0, 1.0 / (p - 1.0));
  return {c1 * bar / (std::pow(c2, dual_exponent(p)) * c_omega), p - 1.0};
}

enum class EstimateKind { apri1, apri2, apri3, apriori };

inline std::string to_string(EstimateKind k) {
  switch (k) {
    case EstimateKind::apri1: return "apri1";
    case EstimateKind::apri2: return "apri2";
    case EstimateKind::apri3: return "apri3";
    case EstimateKind::apriori: return "apriori";
  }
  return "?";
}

struct EstimateReport {
  EstimateKind kind = EstimateKind::apri1;
  double p = 2.0, q = 2.0, epsilon = 0.0;
  double lhs = 0.0, rhs = 0.0, constant = 0.0;
  double c1 = 1.0, c2 = 1.0, c3 = 0.0;
  /// Truncation level of the data; 0 when untruncated.
  double k = 0.0;
  double delta = 0.0;
  double beta = 0.0;
  int dim = 1, n = 2;
  /// Cells where the weight degenerates although grad u does not vanish.
  std::size_t flagged_cells = 0;
  std::vector<std::string> warnings;

  void finish() {
    if (!(lhs >= 0.0) || !(rhs >= 0.0)) throw NumericalError("estimate report: negative side");
    constant = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  }
};

struct EstimateContext {
  double c1 = 1.0, c2 = 1.0, c3 = 0.0;
  double k = 0.0;
  double beta = 0.0;
};

namespace detail {
inline EstimateReport base_report(EstimateKind kind, const SobolevFunction& u, const VectorField& f, double p, double q,
                                  const EstimateContext& ctx) {
  require(u.grid() == f.grid() && u.targets() == f.targets(), "estimate: u and f shapes differ");
  EstimateReport r;
  r.kind = kind;
  r.p = p;
  r.q = q;
  r.epsilon = p - q;
  r.c1 = ctx.c1;
  r.c2 = ctx.c2;
  r.c3 = ctx.c3;
  r.k = ctx.k;
  r.beta = ctx.beta;
  r.dim = u.grid().dim();
  r.n = u.grid().n();
  return r;
}

inline ScalarField shifted_maximal(const VectorField& f, double shift) {
  std::vector<double> v(f.cell_count());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = f.magnitude(c) + shift;
  return maximal(ScalarField(f.grid(), Location::cell, std::move(v)));
}
}  // namespace detail

/// ||grad u||_q against ||f||_q + 1.
inline EstimateReport apri1_report(const SobolevFunction& u, const VectorField& f, double q, const EstimateContext& ctx = {}) {
  require(q > 1.0, "apri1: q must exceed 1");
  EstimateReport r = detail::base_report(EstimateKind::apri1, u, f, q, q, ctx);
  r.epsilon = 0.0;
  r.lhs = lp_norm(gradient(u), q);
  r.rhs = lp_norm(f, q) + 1.0;
  r.finish();
  return r;
}

/// int |grad u|^p (M(|f|+1))^{q-p} against int |f|^q + (C3 + 1).
inline EstimateReport apri2_report(const SobolevFunction& u, const VectorField& f, double p, double q,
                                   const EstimateContext& ctx = {}, const Weight* weight = nullptr) {
  require(q > 1.0 && q <= p, "apri2: need 1 < q <= p");
  EstimateReport r = detail::base_report(EstimateKind::apri2, u, f, p, q, ctx);
  const Weight w = weight ? *weight : estimate_weight(f, p, q, false);
  const VectorField gu = gradient(u);
  r.lhs = std::pow(weighted_norm(gu, w, p), p);
  r.rhs = std::pow(lp_norm(f, q), q) + (ctx.c3 + 1.0);
  r.finish();
  return r;
}

/// int |grad u|^q + |grad u|^p (Mf)^{q-p} against int |f|^q (C3 = 0 only).
/// Cells with Mf = 0 contribute 0 to the weighted term; if grad u does not
/// vanish there the cell is flagged.
inline EstimateReport apri3_report(const SobolevFunction& u, const VectorField& f, double p, double q,
                                   const EstimateContext& ctx = {}) {
  require(q > 1.0 && q <= p, "apri3: need 1 < q <= p");
  require(ctx.c3 == 0.0, "apri3: only defined for C3 = 0");
  EstimateReport r = detail::base_report(EstimateKind::apri3, u, f, p, q, ctx);
  const ScalarField mf = maximal(f);
  const VectorField gu = gradient(u);
  std::size_t flagged = 0;
  r.lhs = integrate_cells(u.grid(), [&](std::size_t c) {
    const double a = gu.magnitude(c);
    double v = std::pow(a, q);
    if (mf[c] > 0.0)
      v += q == p ? std::pow(a, p) : std::pow(a, p) * std::pow(mf[c], q - p);
    else if (a > 0.0)
      ++flagged;
    return v;
  });
  r.flagged_cells = flagged;
  if (flagged) r.warnings.push_back(std::to_string(flagged) + " cells with Mf = 0 but nonzero gradient");
  r.rhs = std::pow(lp_norm(f, q), q);
  r.finish();
  return r;
}

/// Both sides with weight (Mg)^{-epsilon}, g = h + delta:
/// int |grad u|^p w against int (|f|^p + C3) w.
inline EstimateReport apriori_report(const SobolevFunction& u, const VectorField& f, const ScalarField& h, double p,
                                     double epsilon, double delta, const EstimateContext& ctx = {},
                                     std::optional<double> epsilon0 = std::nullopt) {
  require(epsilon >= 0.0, "apriori: epsilon must be nonnegative");
  EstimateReport r = detail::base_report(EstimateKind::apriori, u, f, p, p - epsilon, ctx);
  r.delta = delta;
  bool nonzero = false;
  for (double v : h.values()) nonzero = nonzero || v != 0.0;
  require(nonzero, "apriori: h must not vanish identically");
  if (!(epsilon > 0.0) || (epsilon0 && epsilon >= *epsilon0)) {
    std::ostringstream os;
    os << "epsilon " << epsilon << " outside (0, " << (epsilon0 ? *epsilon0 : std::numeric_limits<double>::infinity())
       << "); estimate unproven there";
    r.warnings.push_back(os.str());
  }
  const ScalarField mg = maximal(regularized_density(h, delta));
  std::vector<double> w(mg.size());
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = std::pow(mg[c], -epsilon);
  const VectorField gu = gradient(u);
  r.lhs = integrate_cells(u.grid(), [&](std::size_t c) { return std::pow(gu.magnitude(c), p) * w[c]; });
  r.rhs = integrate_cells(u.grid(), [&](std::size_t c) { return (std::pow(f.magnitude(c), p) + ctx.c3) * w[c]; });
  r.finish();
  return r;
}

struct ChainReport {
  double p = 2.0, q = 2.0;
  double lhs = 0.0;           // int |grad u|^q
  double weighted = 0.0;      // int |grad u|^p W^{q-p}, W = M(|f|+1)
  double weight_power = 0.0;  // int W^q
  double c1 = 1.0;            // q/p
  double c2 = 0.0;            // (p-q)/p
  double rhs = 0.0;
  bool holds = true;
};

/// int a^q <= (q/p) int a^p W^{-eps} + (eps/p) int W^q with a = |grad u|,
/// W = M(|f|+1), eps = p - q: pointwise Young's inequality with exponents
/// p/q and p/eps applied to a^q W^{-eps q/p} times W^{eps q/p}.
inline ChainReport chain_check(const SobolevFunction& u, const VectorField& f, double p, double q,
                               double tolerance = 1e-10) {
  require(q > 1.0 && q <= p, "chain check: need 1 < q <= p");
  require(u.grid() == f.grid(), "chain check: grid mismatch");
  const ScalarField m = detail::shifted_maximal(f, 1.0);
  const VectorField gu = gradient(u);
  ChainReport r;
  r.p = p;
  r.q = q;
  r.c1 = q / p;
  r.c2 = (p - q) / p;
  const Grid& g = u.grid();
  r.lhs = integrate_cells(g, [&](std::size_t c) { return std::pow(gu.magnitude(c), q); });
  r.weighted = integrate_cells(g, [&](std::size_t c) { return std::pow(gu.magnitude(c), p) * std::pow(m[c], q - p); });
  r.weight_power = integrate_cells(g, [&](std::size_t c) { return std::pow(m[c], q); });
  r.rhs = r.c1 * r.weighted + r.c2 * r.weight_power;
  r.holds = r.lhs <= r.rhs * (1.0 + tolerance);
  if (!r.holds) {
    std::ostringstream os;
    os << "chain check: " << r.lhs << " > " << r.rhs << " (p=" << p << ", q=" << q << ")";
    throw NumericalError(os.str());
  }
  return r;
}

/// max / min of a list of implied constants (1 when all are equal).
inline double spread(const std::vector<double>& values) {
  require(!values.empty(), "spread: empty list");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) return 1.0;
  if (*lo <= 0.0) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

inline void write_report_csv_header(std::ostream& os) { os << "estimate,p,q,epsilon,k,delta,beta,d,n,lhs,rhs,constant\n"; }

inline void write_report_csv_row(std::ostream& os, const EstimateReport& r) {
  os << std::setprecision(17) << to_string(r.kind) << ',' << r.p << ',' << r.q << ',' << r.epsilon << ',' << r.k << ','
     << r.delta << ',' << r.beta << ',' << r.dim << ',' << r.n << ',' << r.lhs << ',' << r.rhs << ',' << r.constant
     << '\n';
}

inline nlohmann::json report_json(const EstimateReport& r) {
  nlohmann::json j = {{"estimate", to_string(r.kind)},
                      {"p", r.p},
                      {"q", r.q},
                      {"epsilon", r.epsilon},
                      {"lhs", r.lhs},
                      {"rhs", r.rhs},
                      {"constant", r.constant},
                      {"C1", r.c1},
                      {"C2", r.c2},
                      {"C3", r.c3},
                      {"k", r.k},
                      {"delta", r.delta},
                      {"beta", r.beta},
                      {"grid", {{"d", r.dim}, {"n", r.n}}}};
  if (r.flagged_cells) j["flagged_cells"] = r.flagged_cells;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

inline nlohmann::json chain_json(const ChainReport& r) {
  return {{"p", r.p},           {"q", r.q},       {"lhs", r.lhs},          {"weighted", r.weighted},
          {"weight_power", r.weight_power}, {"c1", r.c1}, {"c2", r.c2}, {"rhs", r.rhs}, {"holds", r.holds}};
}

}  // namespace vws

#endif  // VWS_ESTIMATES_HPP
