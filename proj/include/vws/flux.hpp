#ifndef VWS_FLUX_HPP
#define VWS_FLUX_HPP

// Flux models S(x, z) for z in R^{d x N} with their structure constants:
//   coercivity  S(x,z).z >= C1 |z|^p - C3
//   growth      |S(x,z)| <= C2 |z|^{p-1} + C3^{(p-1)/p}
//   monotonicity (S(x,z1) - S(x,z2)).(z1 - z2) >= 0
// |z| is the Frobenius norm; z is stored component-major, z[c*d + a].

#include <map>
#include <memory>
#include <optional>
#include <random>

#include "json.hpp"

#include "vws/field.hpp"

namespace vws {

class FluxModel {
 public:
  FluxModel(std::string name, int dim, int targets, double p, double c1, double c2, double c3)
      : name_(std::move(name)), dim_(dim), targets_(targets), p_(p), c1_(c1), c2_(c2), c3_(c3) {
    require(dim == 1 || dim == 2, "flux: dimension must be 1 or 2");
    require(targets >= 1, "flux: need at least one target component");
    require(p > 1.0 && std::isfinite(p), "flux: p must be in (1, inf)");
    require(c1 > 0.0 && c2 > 0.0 && c3 >= 0.0, "flux: need C1, C2 > 0 and C3 >= 0");
  }
  virtual ~FluxModel() = default;

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  int targets() const { return targets_; }
  std::size_t components() const { return static_cast<std::size_t>(dim_ * targets_); }
  double p() const { return p_; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }
  double c3() const { return c3_; }

  /// out = S(x, z); a non-finite result is reported as a model bug.
  void evaluate(const Point& x, std::span<const double> z, std::span<double> out) const {
    apply(x, z, out);
    for (double v : out)
      if (!std::isfinite(v)) throw NumericalError("flux " + name_ + ": non-finite value");
  }

  std::vector<double> operator()(const Point& x, std::span<const double> z) const {
    std::vector<double> out(z.size());
    evaluate(x, z, out);
    return out;
  }

  /// a(x) for models of the form S(x,z) = a(x)|z|^{p-2} z, which derive from
  /// the convex potential a(x)|z|^p / p.
  virtual std::optional<double> radial_coefficient(const Point&) const { return std::nullopt; }
  bool is_variational() const { return radial_coefficient(Point{0.5, 0.5}).has_value(); }

  /// Regularized flux S_mu(x, z) and its Jacobian (row-major m x m), where
  /// |z|^{p-2} is replaced by (|z|^2 + mu^2)^{(p-2)/2}. Models without a
  /// known linearization return false.
  virtual bool linearize(const Point& x, std::span<const double> z, double mu, std::span<double> s,
                         std::span<double> jac) const {
    (void)x, (void)z, (void)mu, (void)s, (void)jac;
    return false;
  }

 protected:
  void radial_linearize(double a, std::span<const double> z, double mu, std::span<double> s,
                        std::span<double> jac) const {
    const std::size_t m = z.size();
    double r2 = mu * mu;
    for (double v : z) r2 += v * v;
    const double f = a * std::pow(r2, 0.5 * (p_ - 2.0));
    const double g = (p_ - 2.0) * f / r2;
    for (std::size_t i = 0; i < m; ++i) {
      s[i] = f * z[i];
      for (std::size_t j = 0; j < m; ++j) jac[i * m + j] = g * z[i] * z[j] + (i == j ? f : 0.0);
    }
  }

  virtual void apply(const Point& x, std::span<const double> z, std::span<double> out) const = 0;

  /// |z|^{p-2} z with the value 0 at z = 0.
  void power_map(std::span<const double> z, double scale, std::span<double> out) const {
    const double r = frobenius(z);
    const double f = r > 0.0 ? scale * std::pow(r, p_ - 2.0) : 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) out[k] = f * z[k];
  }

 private:
  std::string name_;
  int dim_, targets_;
  double p_, c1_, c2_, c3_;
};

using FluxPtr = std::shared_ptr<const FluxModel>;

/// S(z) = |z|^{p-2} z; C1 = C2 = 1, C3 = 0.
class PLaplacian final : public FluxModel {
 public:
  PLaplacian(int dim, int targets, double p) : FluxModel("p_laplacian", dim, targets, p, 1.0, 1.0, 0.0) {}
  std::optional<double> radial_coefficient(const Point&) const override { return 1.0; }
  bool linearize(const Point&, std::span<const double> z, double mu, std::span<double> s,
                 std::span<double> jac) const override {
    radial_linearize(1.0, z, mu, s, jac);
    return true;
  }

 protected:
  void apply(const Point&, std::span<const double> z, std::span<double> out) const override { power_map(z, 1.0, out); }
};

/// S(x,z) = a(x)|z|^{p-2} z with a(x) = 5/4 + 3/4 sin(2 pi x) sin(2 pi y) in [1/2, 2].
class AnisotropicPLaplacian final : public FluxModel {
 public:
  AnisotropicPLaplacian(int dim, int targets, double p) : FluxModel("anisotropic", dim, targets, p, 0.5, 2.0, 0.0) {}

  static double coefficient(const Point& x, int dim) {
    const double two_pi = 2.0 * std::acos(-1.0);
    const double s = std::sin(two_pi * x[0]) * (dim == 2 ? std::sin(two_pi * x[1]) : 1.0);
    return 1.25 + 0.75 * s;
  }
  std::optional<double> radial_coefficient(const Point& x) const override { return coefficient(x, dim()); }
  bool linearize(const Point& x, std::span<const double> z, double mu, std::span<double> s,
                 std::span<double> jac) const override {
    radial_linearize(coefficient(x, dim()), z, mu, s, jac);
    return true;
  }

 protected:
  void apply(const Point& x, std::span<const double> z, std::span<double> out) const override {
    power_map(z, coefficient(x, dim()), out);
  }
};

/// Non-variational model S(z) = |z|^{p-2} z + b J z with J a quarter turn
/// (skew, so J w . w = 0). For p >= 2, b|z| <= b|z|^{p-1} + b gives
/// C1 = 1, C2 = 1 + b, C3 = b^{p/(p-1)}.
class SkewPLaplacian final : public FluxModel {
 public:
  SkewPLaplacian(int dim, int targets, double p, double b)
      : FluxModel("skew", dim, targets, p, 1.0, 1.0 + b, std::pow(b, p / (p - 1.0))), b_(b) {
    require(p >= 2.0, "skew flux: needs p >= 2");
    require(b >= 0.0, "skew flux: b must be nonnegative");
  }
  double skew() const { return b_; }

  /// J z: rotates the two axis components of each target (d = 2), or
  /// consecutive target pairs (d = 1).
  static void rotate(std::span<const double> z, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k + 1 < z.size(); k += 2) {
      out[k] = -z[k + 1];
      out[k + 1] = z[k];
    }
  }

  bool linearize(const Point& x, std::span<const double> z, double mu, std::span<double> s,
                 std::span<double> jac) const override {
    radial_linearize(1.0, z, mu, s, jac);
    const std::size_t m = z.size();
    for (std::size_t k = 0; k + 1 < m; k += 2) {
      s[k] -= b_ * z[k + 1];
      s[k + 1] += b_ * z[k];
      jac[k * m + k + 1] -= b_;
      jac[(k + 1) * m + k] += b_;
    }
    (void)x;
    return true;
  }

 protected:
  void apply(const Point&, std::span<const double> z, std::span<double> out) const override {
    power_map(z, 1.0, out);
    std::vector<double> jz(z.size());
    rotate(z, jz);
    for (std::size_t k = 0; k < z.size(); ++k) out[k] += b_ * jz[k];
  }

 private:
  double b_;
};

/// S(z) = -|z|^{p-2} z claiming the p-Laplacian constants; violates the
/// assumptions. Exists for fault injection.
class NegatedPLaplacian final : public FluxModel {
 public:
  NegatedPLaplacian(int dim, int targets, double p) : FluxModel("negated", dim, targets, p, 1.0, 1.0, 0.0) {}

 protected:
  void apply(const Point&, std::span<const double> z, std::span<double> out) const override { power_map(z, -1.0, out); }
};

/// Builds a model by name. Parameters: "p" (all), "b" (skew, default 0.5).
inline FluxPtr make_flux(const std::string& name, int dim, int targets, const std::map<std::string, double>& params) {
  auto get = [&](const std::string& key, std::optional<double> fallback) {
    auto it = params.find(key);
    if (it != params.end()) return it->second;
    if (!fallback) throw InvalidArgument("flux " + name + ": missing parameter '" + key + "'");
    return *fallback;
  };
  for (const auto& [key, value] : params)
    if (key != "p" && !(name == "skew" && key == "b"))
      throw InvalidArgument("flux " + name + ": unknown parameter '" + key + "'");
  const double p = get("p", std::nullopt);
  if (name == "p_laplacian") return std::make_shared<PLaplacian>(dim, targets, p);
  if (name == "anisotropic") return std::make_shared<AnisotropicPLaplacian>(dim, targets, p);
  if (name == "skew") return std::make_shared<SkewPLaplacian>(dim, targets, p, get("b", 0.5));
  if (name == "negated") return std::make_shared<NegatedPLaplacian>(dim, targets, p);
  throw InvalidArgument("unknown flux model: " + name);
}

inline const std::vector<std::string>& flux_names() {
  static const std::vector<std::string> names{"p_laplacian", "anisotropic", "skew", "negated"};
  return names;
}

/// Inverse of w -> |w|^{p-2} w: w -> |w|^{p'-2} w.
inline std::vector<double> power_map_inverse(std::span<const double> w, double p) {
  const double q = dual_exponent(p);
  const double r = frobenius(w);
  const double f = r > 0.0 ? std::pow(r, q - 2.0) : 0.0;
  std::vector<double> out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) out[k] = f * w[k];
  return out;
}

struct AssumptionReport {
  std::string model;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  /// Worst relative margins; negative means violated.
  double coercivity_margin = std::numeric_limits<double>::infinity();
  double growth_margin = std::numeric_limits<double>::infinity();
  double monotonicity_margin = std::numeric_limits<double>::infinity();
  std::size_t coercivity_violations = 0;
  std::size_t growth_violations = 0;
  std::size_t monotonicity_violations = 0;

  bool coercivity_ok() const { return coercivity_violations == 0; }
  bool growth_ok() const { return growth_violations == 0; }
  bool monotonicity_ok() const { return monotonicity_violations == 0; }
  bool passed() const { return coercivity_ok() && growth_ok() && monotonicity_ok(); }
};

/// Relative slack below which an inequality counts as violated.
inline constexpr double kAssumptionTolerance = 1e-10;

/// Samples x uniformly, z with log-uniform magnitude in [1e-6, 1e6] and a
/// uniform direction; z2 is either independent or a small perturbation of z1.
inline AssumptionReport verify_assumptions(const FluxModel& s, std::size_t samples, std::uint64_t seed = 1) {
  require(samples >= 1, "verify assumptions: need at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> logmag(std::log(1e-6), std::log(1e6));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t m = s.components();
  const double p = s.p();
  auto random_z = [&](double mag) {
    std::vector<double> z(m);
    double r = 0.0;
    while (r == 0.0) {
      for (double& v : z) v = gauss(rng);
      r = frobenius(z);
    }
    for (double& v : z) v *= mag / r;
    return z;
  };
  AssumptionReport rep;
  rep.model = s.name();
  rep.samples = samples;
  rep.seed = seed;
  const double growth_floor = std::pow(s.c3(), (p - 1.0) / p);
  std::vector<double> s1(m), s2(m);
  for (std::size_t k = 0; k < samples; ++k) {
    Point x{unit(rng), s.dim() == 2 ? unit(rng) : 0.0};
    const auto z1 = random_z(std::exp(logmag(rng)));
    std::vector<double> z2;
    if (k % 2 == 0) {
      z2 = random_z(std::exp(logmag(rng)));
    } else {
      const double r1 = frobenius(z1);
      const auto dz = random_z(r1 * std::exp(std::log(1e-6) * unit(rng)));
      z2 = z1;
      for (std::size_t a = 0; a < m; ++a) z2[a] += dz[a];
    }
    s.evaluate(x, z1, s1);
    s.evaluate(x, z2, s2);
    const double r = frobenius(z1), rs = frobenius(s1);
    const double rp = std::pow(r, p);

    const double a1 = (dot(s1, z1) - (s.c1() * rp - s.c3())) / (rs * r + s.c1() * rp + s.c3());
    rep.coercivity_margin = std::min(rep.coercivity_margin, a1);
    if (a1 < -kAssumptionTolerance) ++rep.coercivity_violations;

    const double bound = s.c2() * std::pow(r, p - 1.0) + growth_floor;
    const double a2 = (bound - rs) / (bound + rs);
    rep.growth_margin = std::min(rep.growth_margin, a2);
    if (a2 < -kAssumptionTolerance) ++rep.growth_violations;

    std::vector<double> ds(m), dz(m);
    for (std::size_t a = 0; a < m; ++a) {
      ds[a] = s1[a] - s2[a];
      dz[a] = z1[a] - z2[a];
    }
    const double denom = frobenius(ds) * frobenius(dz);
    const double a3 = denom > 0.0 ? dot(ds, dz) / denom : 0.0;
    rep.monotonicity_margin = std::min(rep.monotonicity_margin, a3);
    if (a3 < -kAssumptionTolerance) ++rep.monotonicity_violations;
  }
  return rep;
}

/// int (S(G1) - S(G2)).(G1 - G2) w dx; a sum below -1e-12 is a monotonicity violation.
inline double monotone_pairing(const FluxModel& s, const VectorField& g1, const VectorField& g2, const Weight& w) {
  const Grid& g = g1.grid();
  require(g1.grid() == g2.grid() && g1.targets() == g2.targets() && g == w.grid(), "monotone pairing: shape mismatch");
  require(static_cast<std::size_t>(g1.components()) == s.components(), "monotone pairing: model shape mismatch");
  const std::size_t m = s.components();
  std::vector<double> s1(m), s2(m);
  const double total = integrate_cells(g, [&](std::size_t c) {
    const Point x = g.cell_center(c);
    auto a = g1.cell(c), b = g2.cell(c);
    s.evaluate(x, a, s1);
    s.evaluate(x, b, s2);
    double v = 0.0;
    for (std::size_t k = 0; k < m; ++k) v += (s1[k] - s2[k]) * (a[k] - b[k]);
    return v * w[c];
  });
  if (total < -1e-12) throw NumericalError("monotone pairing: negative value " + std::to_string(total) + " for flux " + s.name());
  return total;
}

inline nlohmann::json assumption_report_json(const AssumptionReport& r) {
  return {{"model", r.model},
          {"samples", r.samples},
          {"seed", r.seed},
          {"passed", r.passed()},
          {"coercivity", {{"worst_margin", r.coercivity_margin}, {"violations", r.coercivity_violations}}},
          {"growth", {{"worst_margin", r.growth_margin}, {"violations", r.growth_violations}}},
          {"monotonicity", {{"worst_margin", r.monotonicity_margin}, {"violations", r.monotonicity_violations}}}};
}

}  // namespace vws

#endif  // VWS_FLUX_HPP
