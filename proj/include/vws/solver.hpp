#ifndef VWS_SOLVER_HPP
#define VWS_SOLVER_HPP

// Discrete Dirichlet problem div S(x, grad u) = div |f|^{p-2} f on the unit
// cube: sum_c h^d (S(x_c, grad u_c) - F_c) . grad phi_c = 0 for every nodal
// phi vanishing on the boundary, with F = |f|^{p-2} f.
//
// Variational fluxes a(x)|z|^{p-2} z minimize the regularized energy
//   J_mu(u) = sum_c h^d [ a(x_c)/p (|grad u_c|^2 + mu^2)^{p/2} - F_c . grad u_c ]
// by preconditioned nonlinear conjugate gradients (Polak-Ribiere+, the
// preconditioner being the exact Hessian of J_mu) with Armijo backtracking,
// continuing mu -> 0. Other fluxes use a damped iteration on the weak
// residual with the residual merit r^T K^{-1} r, K the discrete Laplacian.
//
// Convergence is measured in the dual norm ||r||_* = c_p sqrt(r^T K^{-1} r),
// which bounds |r . phi| <= ||r||_* ||grad phi||_{L^p} for every test phi
// (c_p = 1 for p >= 2 and h^{-d(1/p - 1/2)} for p < 2).

#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "vws/flux.hpp"

namespace vws {

struct SolverConfig {
  /// Regularization in units of the data gradient scale ||f||_{L^p}.
  double mu0 = 1.0;
  double mu_min = 1e-8;
  /// Continuation below mu_min while the unregularized residual is too large.
  double mu_floor = 1e-16;
  double continuation = 0.1;
  /// Absolute residual tolerance; 0 selects tol_relative times the data scale.
  double tol_grad = 0.0;
  double tol_relative = 1e-10;
  int max_iters = 400;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  /// Damping of the first non-variational step.
  double damping = 1.0;
  /// Samples for the upfront assumption check (0 skips it).
  std::size_t verify_samples = 20000;
  std::uint64_t seed = 1;

  void validate() const {
    require(mu_min > 0.0 && mu_min <= mu0, "solver config: need 0 < mu_min <= mu0");
    require(mu_floor > 0.0 && mu_floor <= mu_min, "solver config: need 0 < mu_floor <= mu_min");
    require(continuation > 0.0 && continuation < 1.0, "solver config: continuation factor must lie in (0,1)");
    require(tol_grad >= 0.0 && tol_relative > 0.0, "solver config: tolerances must be positive");
    require(tol_grad > 0.0 || tol_relative > 0.0, "solver config: tol_grad must be positive");
    require(max_iters >= 1, "solver config: max_iters must be >= 1");
    require(armijo > 0.0 && armijo < 0.5, "solver config: Armijo constant must lie in (0, 1/2)");
    require(backtrack > 0.0 && backtrack < 1.0, "solver config: backtracking factor must lie in (0,1)");
    require(damping > 0.0 && damping <= 1.0, "solver config: damping must lie in (0,1]");
  }
};

struct IterationRecord {
  int stage = 0;
  int iter = 0;
  double energy = 0.0;    // J_mu, or the residual merit for non-variational fluxes
  double residual = 0.0;  // dual norm of the regularized residual
  double mu = 0.0;
  double step = 0.0;
};

struct SolveResult {
  SobolevFunction u;
  /// Dual norm of the unregularized weak residual at u.
  double residual = 0.0;
  double tolerance = 0.0;
  double final_mu = 0.0;
  int iterations = 0;
  bool variational = false;
  std::vector<IterationRecord> history;
};

class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, SolveResult partial) : NumericalError(what), partial_(std::move(partial)) {}
  const SolveResult& partial() const { return partial_; }

 private:
  SolveResult partial_;
};

/// f_k = min(k, |f|) f / |f| cellwise, with 0 where f = 0.
inline VectorField truncate_rhs(const VectorField& f, double k) {
  require(k > 0.0, "truncate rhs: level must be positive");
  VectorField out = f;
  for (std::size_t c = 0; c < f.cell_count(); ++c) {
    const double r = f.magnitude(c);
    if (r <= k) continue;
    const double s = k / r;
    for (double& v : out.cell(c)) v *= s;
  }
  return out;
}

/// F = |f|^{p-2} f cellwise (0 at f = 0).
inline VectorField rhs_flux(const VectorField& f, double p) {
  VectorField out = f;
  for (std::size_t c = 0; c < f.cell_count(); ++c) {
    const double r = f.magnitude(c);
    const double s = r > 0.0 ? std::pow(r, p - 2.0) : 0.0;
    for (double& v : out.cell(c)) v *= s;
  }
  return out;
}

namespace detail {

/// Interior-node degrees of freedom and the cell-local gradient stencil.
class Discretization {
 public:
  Discretization(const Grid& g, int targets) : g_(g), targets_(targets) {
    dof_of_node_.assign(g.node_count(), -1);
    for (std::size_t k = 0; k < g.node_count(); ++k)
      if (!g.is_boundary_node(k)) {
        dof_of_node_[k] = static_cast<long>(nodes_.size());
        nodes_.push_back(k);
      }
    const double ih = 1.0 / g.h();
    if (g.dim() == 1) {
      coef_ = {{{-ih, ih, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}}};
    } else {
      const double c = 0.5 * ih;
      coef_ = {{{-c, c, -c, c}, {-c, -c, c, c}}};
    }
    local_ = g.dim() == 1 ? 2 : 4;
  }

  const Grid& grid() const { return g_; }
  int targets() const { return targets_; }
  std::size_t dofs() const { return nodes_.size() * static_cast<std::size_t>(targets_); }
  int local_nodes() const { return local_; }
  std::size_t components() const { return static_cast<std::size_t>(g_.dim() * targets_); }
  /// d(grad u)[k*d + a] / d u(local node l, target k).
  double coef(int a, int l) const { return coef_[a][l]; }
  long dof(std::size_t node, int comp) const {
    const long d = dof_of_node_[node];
    return d < 0 ? -1 : d * targets_ + comp;
  }

  Eigen::VectorXd restrict(const SobolevFunction& u) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(dofs()));
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      for (int c = 0; c < targets_; ++c) x[static_cast<Eigen::Index>(i * targets_ + c)] = u.at(nodes_[i], c);
    return x;
  }

  SobolevFunction extend(const Eigen::VectorXd& x) const {
    SobolevFunction u(g_, targets_);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      for (int c = 0; c < targets_; ++c) u.at(nodes_[i], c) = x[static_cast<Eigen::Index>(i * targets_ + c)];
    return u;
  }

  /// Cell gradients of the interior vector (boundary values 0).
  std::vector<double> gradient(const Eigen::VectorXd& x) const { return vws::gradient(extend(x)).values(); }

  /// Adjoint of gradient scaled by h^d, restricted to interior dofs.
  Eigen::VectorXd weak_form(std::span<const double> cell_values) const {
    const auto full = gradient_transpose(g_, targets_, cell_values);
    Eigen::VectorXd r(static_cast<Eigen::Index>(dofs()));
    const double vol = g_.cell_volume();
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      for (int c = 0; c < targets_; ++c)
        r[static_cast<Eigen::Index>(i * targets_ + c)] = vol * full[nodes_[i] * targets_ + c];
    return r;
  }

  /// Sparse sum_c h^d B_c^T H_c B_c from per-cell m x m blocks.
  Eigen::SparseMatrix<double> assemble(const std::vector<double>& blocks) const {
    const std::size_t m = components();
    const int d = g_.dim();
    const double vol = g_.cell_volume();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g_.cell_count() * static_cast<std::size_t>(local_ * local_) * targets_ * targets_);
    std::array<std::size_t, 4> nd{};
    for (std::size_t c = 0; c < g_.cell_count(); ++c) {
      g_.cell_nodes(c, nd);
      const double* h = blocks.data() + c * m * m;
      for (int l = 0; l < local_; ++l)
        for (int k = 0; k < targets_; ++k) {
          const long row = dof(nd[l], k);
          if (row < 0) continue;
          for (int l2 = 0; l2 < local_; ++l2)
            for (int k2 = 0; k2 < targets_; ++k2) {
              const long col = dof(nd[l2], k2);
              if (col < 0) continue;
              double v = 0.0;
              for (int a = 0; a < d; ++a)
                for (int a2 = 0; a2 < d; ++a2)
                  v += coef(a, l) * h[(k * d + a) * m + (k2 * d + a2)] * coef(a2, l2);
              trip.emplace_back(row, col, vol * v);
            }
        }
    }
    Eigen::SparseMatrix<double> mat(static_cast<Eigen::Index>(dofs()), static_cast<Eigen::Index>(dofs()));
    mat.setFromTriplets(trip.begin(), trip.end());
    return mat;
  }

  Eigen::SparseMatrix<double> laplacian() const {
    const std::size_t m = components();
    std::vector<double> blocks(g_.cell_count() * m * m, 0.0);
    for (std::size_t c = 0; c < g_.cell_count(); ++c)
      for (std::size_t i = 0; i < m; ++i) blocks[c * m * m + i * m + i] = 1.0;
    return assemble(blocks);
  }

 private:
  Grid g_;
  int targets_;
  std::vector<long> dof_of_node_;
  std::vector<std::size_t> nodes_;
  std::array<std::array<double, 4>, 2> coef_{};
  int local_ = 2;
};

inline double dual_factor(const Grid& g, double p) {
  return p >= 2.0 ? 1.0 : std::pow(g.h(), -g.dim() * (1.0 / p - 0.5));
}

}  // namespace detail

/// Regularized energy J_mu of a variational flux and its derivatives.
class EnergyFunctional {
 public:
  EnergyFunctional(const FluxModel& s, const VectorField& f)
      : s_(s), disc_(f.grid(), f.targets()), flux_rhs_(rhs_flux(f, s.p())) {
    require(s.is_variational(), "energy functional: flux has no potential");
    require(static_cast<std::size_t>(f.components()) == s.components(), "energy functional: shape mismatch");
    const Grid& g = f.grid();
    coef_.resize(g.cell_count());
    for (std::size_t c = 0; c < g.cell_count(); ++c) coef_[c] = *s.radial_coefficient(g.cell_center(c));
  }

  const detail::Discretization& discretization() const { return disc_; }
  const VectorField& rhs() const { return flux_rhs_; }

  double density(std::size_t c, std::span<const double> z, double mu) const {
    double r2 = mu * mu;
    for (double v : z) r2 += v * v;
    return coef_[c] / s_.p() * std::pow(r2, 0.5 * s_.p()) - dot(flux_rhs_.cell(c), z);
  }

  double energy(const Eigen::VectorXd& x, double mu) const {
    const auto z = disc_.gradient(x);
    const std::size_t m = disc_.components();
    return integrate_cells(disc_.grid(), [&](std::size_t c) {
      return density(c, std::span<const double>(z.data() + c * m, m), mu);
    });
  }

  /// J_mu(x + alpha d) - J_mu(x) from cell gradients z and dz, summed cellwise.
  double energy_change(const std::vector<double>& z, const std::vector<double>& dz, double alpha, double mu) const {
    const std::size_t m = disc_.components();
    std::vector<double> zt(m);
    return integrate_cells(disc_.grid(), [&](std::size_t c) {
      std::span<const double> z0(z.data() + c * m, m);
      for (std::size_t k = 0; k < m; ++k) zt[k] = z0[k] + alpha * dz[c * m + k];
      double r0 = mu * mu, r1 = mu * mu;
      for (std::size_t k = 0; k < m; ++k) {
        r0 += z0[k] * z0[k];
        r1 += zt[k] * zt[k];
      }
      const double pw = 0.5 * s_.p();
      // a/p (r1^{p/2} - r0^{p/2}) without cancellation for small steps.
      const double dpow = std::abs(std::log(r1 / r0)) < 1e-3 ? std::pow(r0, pw) * std::expm1(pw * std::log1p((r1 - r0) / r0))
                                                              : std::pow(r1, pw) - std::pow(r0, pw);
      double lin = 0.0;
      for (std::size_t k = 0; k < m; ++k) lin += flux_rhs_.cell(c)[k] * dz[c * m + k];
      return coef_[c] / s_.p() * dpow - alpha * lin;
    });
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x, double mu) const {
    const auto z = disc_.gradient(x);
    return gradient_from(z, mu);
  }

  Eigen::VectorXd gradient_from(const std::vector<double>& z, double mu) const {
    const std::size_t m = disc_.components();
    std::vector<double> w(z.size());
    for (std::size_t c = 0; c < disc_.grid().cell_count(); ++c) {
      double r2 = mu * mu;
      for (std::size_t k = 0; k < m; ++k) r2 += z[c * m + k] * z[c * m + k];
      const double f = coef_[c] * std::pow(r2, 0.5 * (s_.p() - 2.0));
      for (std::size_t k = 0; k < m; ++k) w[c * m + k] = f * z[c * m + k] - flux_rhs_.cell(c)[k];
    }
    return disc_.weak_form(w);
  }

  Eigen::SparseMatrix<double> hessian_from(const std::vector<double>& z, double mu) const {
    const std::size_t m = disc_.components();
    const Grid& g = disc_.grid();
    std::vector<double> blocks(g.cell_count() * m * m);
    std::vector<double> sv(m);
    for (std::size_t c = 0; c < g.cell_count(); ++c)
      s_.linearize(g.cell_center(c), std::span<const double>(z.data() + c * m, m), mu, sv,
                   std::span<double>(blocks.data() + c * m * m, m * m));
    return disc_.assemble(blocks);
  }

 private:
  const FluxModel& s_;
  detail::Discretization disc_;
  VectorField flux_rhs_;
  std::vector<double> coef_;
};

/// Weak residual vector of the unregularized equation on interior dofs.
inline Eigen::VectorXd residual_vector(const FluxModel& s, const detail::Discretization& disc, const VectorField& rhs,
                                       const std::vector<double>& z) {
  const Grid& g = disc.grid();
  const std::size_t m = disc.components();
  std::vector<double> w(z.size());
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    s.evaluate(g.cell_center(c), std::span<const double>(z.data() + c * m, m), std::span<double>(w.data() + c * m, m));
    for (std::size_t k = 0; k < m; ++k) w[c * m + k] -= rhs.cell(c)[k];
  }
  return disc.weak_form(w);
}

/// sum_c h^d (S(grad u) - |f|^{p-2} f) . grad phi for a zero-trace phi.
inline double weak_residual(const FluxModel& s, const SobolevFunction& u, const VectorField& f,
                            const SobolevFunction& phi) {
  require(phi.trace_is_zero(), "weak residual: test function must vanish on the boundary");
  require(u.grid() == f.grid() && u.grid() == phi.grid(), "weak residual: grid mismatch");
  require(u.targets() == f.targets() && u.targets() == phi.targets(), "weak residual: component mismatch");
  const VectorField gu = gradient(u), gp = gradient(phi);
  const VectorField rhs = rhs_flux(f, s.p());
  const Grid& g = u.grid();
  std::vector<double> sv(gu.components());
  return integrate_cells(g, [&](std::size_t c) {
    s.evaluate(g.cell_center(c), gu.cell(c), sv);
    double v = 0.0;
    for (std::size_t k = 0; k < sv.size(); ++k) v += (sv[k] - rhs.cell(c)[k]) * gp.cell(c)[k];
    return v;
  });
}

namespace detail {

class DualNorm {
 public:
  DualNorm(const Discretization& disc, double p) : factor_(dual_factor(disc.grid(), p)) {
    if (disc.dofs() == 0) return;
    chol_.compute(disc.laplacian());
    if (chol_.info() != Eigen::Success) throw NumericalError("solver: Laplacian factorization failed");
    ready_ = true;
  }
  double operator()(const Eigen::VectorXd& r) const {
    if (!ready_) return 0.0;
    const Eigen::VectorXd y = chol_.solve(r);
    return factor_ * std::sqrt(std::max(0.0, r.dot(y)));
  }
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& r) const { return chol_.solve(r); }

 private:
  double factor_;
  bool ready_ = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol_;
};

}  // namespace detail

inline std::string describe_assumption_failure(const AssumptionReport& rep) {
  std::string what;
  if (!rep.coercivity_ok()) what += " coercivity";
  if (!rep.growth_ok()) what += " growth";
  if (!rep.monotonicity_ok()) what += " monotonicity";
  return what;
}

namespace detail {

/// Preconditioned NCG on J_mu for one continuation stage.
inline bool minimize_stage(const EnergyFunctional& j, Eigen::VectorXd& x, double mu, double stage_tol,
                           const DualNorm& dual, const SolverConfig& cfg, int stage, SolveResult& res) {
  const auto& disc = j.discretization();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> pre;
  bool analyzed = false;
  Eigen::VectorXd d, g_prev, z_prev;
  std::vector<double> z = disc.gradient(x);
  double energy = j.energy(x, mu);
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd g = j.gradient_from(z, mu);
    const double rn = dual(g);
    res.history.push_back({stage, it, energy, rn, mu, it == 0 ? 0.0 : res.history.back().step});
    if (rn <= stage_tol) return true;
    Eigen::SparseMatrix<double> h = j.hessian_from(z, mu);
    if (!analyzed) {
      pre.analyzePattern(h);
      analyzed = true;
    }
    pre.factorize(h);
    if (pre.info() != Eigen::Success) throw NumericalError("solver: Hessian factorization failed");
    const Eigen::VectorXd pz = pre.solve(g);
    double beta = 0.0;
    if (it > 0) beta = std::max(0.0, g.dot(pz - z_prev) / g_prev.dot(z_prev));
    d = it > 0 ? Eigen::VectorXd(-pz + beta * d) : Eigen::VectorXd(-pz);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = -pz;
      slope = g.dot(d);
    }
    if (!(slope < 0.0)) return rn <= stage_tol;
    const std::vector<double> dz = disc.gradient(d);
    double alpha = 1.0, change = 0.0;
    bool accepted = false;
    for (int b = 0; b < cfg.max_backtracks; ++b) {
      change = j.energy_change(z, dz, alpha, mu);
      if (change <= cfg.armijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= cfg.backtrack;
    }
    if (!accepted) {
      // No representable decrease left: the stage is at rounding level.
      return false;
    }
    x += alpha * d;
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += alpha * dz[k];
    energy += change;
    res.history.back().step = alpha;
    ++res.iterations;
    g_prev = g;
    z_prev = pz;
  }
  return false;
}

/// Damped iteration x <- x - tau P^{-1} r for non-variational fluxes, P the
/// linearized operator when the model provides one, else the Laplacian.
inline bool damped_stage(const FluxModel& s, const Discretization& disc, const VectorField& rhs, Eigen::VectorXd& x,
                         double mu, double stage_tol, const DualNorm& dual, const SolverConfig& cfg, int stage,
                         SolveResult& res) {
  const Grid& g = disc.grid();
  const std::size_t m = disc.components();
  auto regularized_residual = [&](const std::vector<double>& z, std::vector<double>* blocks) {
    std::vector<double> w(z.size());
    std::vector<double> jac(m * m);
    bool linear = true;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      std::span<const double> zc(z.data() + c * m, m);
      std::span<double> wc(w.data() + c * m, m);
      if (!s.linearize(g.cell_center(c), zc, mu, wc, jac)) {
        s.evaluate(g.cell_center(c), zc, wc);
        linear = false;
      } else if (blocks) {
        std::copy(jac.begin(), jac.end(), blocks->begin() + static_cast<long>(c * m * m));
      }
      for (std::size_t k = 0; k < m; ++k) wc[k] -= rhs.cell(c)[k];
    }
    return std::pair<Eigen::VectorXd, bool>{disc.weak_form(w), linear};
  };
  std::vector<double> blocks(g.cell_count() * m * m);
  std::vector<double> z = disc.gradient(x);
  auto [r, linear] = regularized_residual(z, &blocks);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const double rn = dual(r);
    const double merit = rn * rn;
    res.history.push_back({stage, it, merit, rn, mu, it == 0 ? 0.0 : res.history.back().step});
    if (rn <= stage_tol) return true;
    Eigen::VectorXd d;
    if (linear) {
      Eigen::SparseMatrix<double> jm = disc.assemble(blocks);
      if (!analyzed) {
        lu.analyzePattern(jm);
        analyzed = true;
      }
      lu.factorize(jm);
      if (lu.info() != Eigen::Success) throw NumericalError("solver: Jacobian factorization failed");
      d = -lu.solve(r);
    } else {
      d = -dual.apply_inverse(r);
    }
    double tau = cfg.damping;
    bool accepted = false;
    for (int b = 0; b < cfg.max_backtracks; ++b) {
      const Eigen::VectorXd xt = x + tau * d;
      std::vector<double> zt = disc.gradient(xt);
      auto [rt, lt] = regularized_residual(zt, &blocks);
      const double mt = dual(rt);
      if (mt * mt <= (1.0 - 2.0 * cfg.armijo * tau) * merit || (!linear && mt < rn)) {
        x = xt;
        z = std::move(zt);
        r = std::move(rt);
        linear = lt;
        accepted = true;
        break;
      }
      tau *= cfg.backtrack;
    }
    if (!accepted) return false;
    res.history.back().step = tau;
    ++res.iterations;
  }
  return false;
}

}  // namespace detail

/// Solves the discrete problem from the initial guess (zero by default).
inline SolveResult solve(const FluxModel& s, const VectorField& f, const SolverConfig& cfg,
                         const std::optional<SobolevFunction>& initial = std::nullopt) {
  cfg.validate();
  require(static_cast<std::size_t>(f.components()) == s.components() && f.grid().dim() == s.dim(),
          "solve: flux model shape does not match the right-hand side");
  if (cfg.verify_samples > 0) {
    const AssumptionReport rep = verify_assumptions(s, cfg.verify_samples, cfg.seed);
    if (!rep.passed())
      throw InvalidArgument("solve: flux model '" + s.name() + "' rejected, violated:" + describe_assumption_failure(rep));
  }
  const Grid& g = f.grid();
  const detail::Discretization disc(g, f.targets());
  const detail::DualNorm dual(disc, s.p());
  const VectorField rhs = rhs_flux(f, s.p());

  const double fscale = lp_norm(f, s.p());
  const double rscale = std::pow(fscale, s.p() - 1.0);
  SolveResult res;
  res.variational = s.is_variational();
  res.tolerance = cfg.tol_grad > 0.0 ? cfg.tol_grad : std::max(cfg.tol_relative * rscale, 1e-14);

  Eigen::VectorXd x = initial ? disc.restrict(*initial) : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(disc.dofs()));
  if (initial) require(initial->grid() == g && initial->targets() == f.targets(), "solve: initial guess shape mismatch");

  auto true_residual = [&](const Eigen::VectorXd& v) { return dual(residual_vector(s, disc, rhs, disc.gradient(v))); };
  res.residual = true_residual(x);
  if (res.residual <= res.tolerance || disc.dofs() == 0) {
    res.u = disc.extend(x);
    return res;
  }

  const double zscale = fscale > 0.0 ? fscale : 1.0;
  std::optional<EnergyFunctional> energy;
  if (res.variational) energy.emplace(s, f);
  int stage = 0;
  for (double mu_rel = cfg.mu0;; mu_rel *= cfg.continuation, ++stage) {
    const bool final_stage = mu_rel <= cfg.mu_min * (1.0 + 1e-12);
    const double mu = mu_rel * zscale;
    // Intermediate stages only need to be accurate to the regularization error.
    const double stage_tol = final_stage ? 0.5 * res.tolerance : std::max(0.5 * res.tolerance, 1e-2 * mu_rel * rscale);
    if (res.variational)
      detail::minimize_stage(*energy, x, mu, stage_tol, dual, cfg, stage, res);
    else
      detail::damped_stage(s, disc, rhs, x, mu, stage_tol, dual, cfg, stage, res);
    res.final_mu = mu;
    if (final_stage) {
      res.residual = true_residual(x);
      if (res.residual <= res.tolerance) break;
      if (mu_rel * cfg.continuation < cfg.mu_floor * (1.0 - 1e-12)) {
        res.u = disc.extend(x);
        std::ostringstream msg;
        msg << "solve: no convergence, residual " << res.residual << " > tolerance " << res.tolerance;
        throw SolverError(msg.str(), std::move(res));
      }
    }
  }
  res.u = disc.extend(x);
  return res;
}

/// Closed-form 1D solution: u' = |w|^{p'-2} w with w = |f|^{p-2} f + c and c
/// fixed by bisection so that u vanishes at both ends.
inline SobolevFunction oracle_1d(double p, const VectorField& f) {
  const Grid& g = f.grid();
  require(g.dim() == 1 && f.targets() == 1, "oracle_1d: needs a scalar 1D field");
  require(p > 1.0, "oracle_1d: p must exceed 1");
  const std::size_t n = g.cell_count();
  std::vector<double> w(n);
  double wmax = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const double v = f.cell(c)[0];
    w[c] = v == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v), p - 1.0), v);
    wmax = std::max(wmax, std::abs(w[c]));
  }
  const double q = dual_exponent(p);
  std::vector<double> du(n);
  auto slope_sum = [&](double c) {
    for (std::size_t k = 0; k < n; ++k) {
      const double v = w[k] + c;
      du[k] = v == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v), q - 1.0), v);
    }
    return pairwise_sum(du);
  };
  double lo = -wmax - 1.0, hi = wmax + 1.0;
  if (!(slope_sum(lo) <= 0.0 && slope_sum(hi) >= 0.0)) throw NumericalError("oracle_1d: bisection bracket failure");
  if (wmax == 0.0) return SobolevFunction(g, 1);
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (slope_sum(mid) < 0.0 ? lo : hi) = mid;
  }
  const double flo = std::abs(slope_sum(lo)), fhi = std::abs(slope_sum(hi));
  slope_sum(flo <= fhi ? lo : hi);
  std::vector<double> u(g.node_count(), 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) u[k + 1] = u[k] + du[k] * g.h();
  u[n] = 0.0;
  return SobolevFunction(g, 1, std::move(u), true);
}

struct SequenceLevel {
  double k = 0.0;
  VectorField f_k;
  SolveResult result;
};

struct ApproximationSequence {
  std::vector<SequenceLevel> levels;
  /// Set when a level failed; levels holds the completed ones.
  std::optional<std::string> failure;
  std::optional<SolveResult> failed_partial;
  bool complete() const { return !failure; }
};

inline std::vector<double> default_levels() { return {2, 4, 8, 16, 32, 64, 128, 256}; }

/// Solves for f^k along an increasing ladder, warm-starting each level from
/// the previous solution. A failing level stops the sweep; earlier levels are kept.
inline ApproximationSequence run_sequence(const FluxModel& s, const VectorField& f, const std::vector<double>& levels,
                                          const SolverConfig& cfg) {
  require(!levels.empty(), "run sequence: need at least one level");
  for (std::size_t i = 1; i < levels.size(); ++i) require(levels[i] > levels[i - 1], "run sequence: levels must increase");
  ApproximationSequence seq;
  SolverConfig level_cfg = cfg;
  std::optional<SobolevFunction> warm;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    VectorField fk = truncate_rhs(f, levels[i]);
    if (i > 0) {
      const VectorField& prev = seq.levels.back().f_k;
      for (std::size_t c = 0; c < fk.cell_count(); ++c)
        if (fk.magnitude(c) < prev.magnitude(c)) throw NumericalError("run sequence: truncated data not monotone in k");
    }
    try {
      SolveResult r = solve(s, fk, level_cfg, warm);
      warm = r.u;
      seq.levels.push_back({levels[i], std::move(fk), std::move(r)});
    } catch (const SolverError& e) {
      seq.failure = std::string(e.what()) + " (level k=" + std::to_string(levels[i]) + ")";
      seq.failed_partial = e.partial();
      break;
    }
    level_cfg.verify_samples = 0;  // the model was checked on the first level
  }
  return seq;
}

/// u*(x) = prod_a sin(pi x_a) with data f = grad u* sampled at cell centers,
/// so u* solves the continuous problem for every p-Laplacian exponent.
struct ManufacturedSolution {
  static VectorField rhs(const Grid& g) {
    const int d = g.dim();
    return sample_cells(g, 1, [d](const Point& x, std::span<double> out) {
      const double sx = std::sin(M_PI * x[0]), cx = std::cos(M_PI * x[0]);
      if (d == 1) {
        out[0] = M_PI * cx;
        return;
      }
      const double sy = std::sin(M_PI * x[1]), cy = std::cos(M_PI * x[1]);
      out[0] = M_PI * cx * sy;
      out[1] = M_PI * sx * cy;
    });
  }

  static SobolevFunction exact(const Grid& g) {
    const int d = g.dim();
    return SobolevFunction::sample(
        g, 1, [d](const Point& x, int) { return std::sin(M_PI * x[0]) * (d == 2 ? std::sin(M_PI * x[1]) : 1.0); },
        true);
  }
};

/// CSV: stage, iter, J_mu (or merit), residual, mu, step.
inline void write_history_csv(std::ostream& os, const SolveResult& r) {
  os << std::setprecision(17) << "stage,iter,energy,residual,mu,step\n";
  for (const auto& h : r.history)
    os << h.stage << ',' << h.iter << ',' << h.energy << ',' << h.residual << ',' << h.mu << ',' << h.step << '\n';
}

}  // namespace vws

#endif  // VWS_SOLVER_HPP
