#ifndef GWT_SINKHORN_HPP_
#define GWT_SINKHORN_HPP_

// Entropic optimal transport, balanced and unbalanced (KL marginal penalty).
//
// Plans are produced in kernel form
//   pi_ij = exp((f_i + g_j - C_ij) / eps) mu_i nu_j,
// i.e. the reference measure of the entropy is mu (x) nu, not the counting
// measure. The default solver is the log-stabilized scaling iteration: the
// potentials (f, g) absorb the scalings whenever those leave [e^-30, e^30],
// and a full log-sum-exp sweep replaces a scaling step whenever a kernel row
// or column underflows. Cold starts anneal epsilon geometrically from the
// cost range down to the requested value. The plain scaling iteration
// without absorption is available through SolverConfig::logDomain = false.

#include "gwt/measures.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace gwt {

struct SolverConfig {
  double epsilon = 1e-2;
  std::optional<double> kappa;  ///< absent: balanced marginal constraints
  int maxIterations = 100000;
  double tolerance = 1e-9;  ///< marginal residual (balanced) or potential change (unbalanced)
  bool logDomain = true;
  bool recordTrace = false;  ///< keep the dual objective of every final-stage iteration
  bool epsilonScaling = true;  ///< anneal epsilon on cold starts (log domain only)
  bool newtonPolish = true;    ///< finish stalled log-domain solves with dual Newton steps

  void validate() const {
    detail::require(epsilon > 0.0 && std::isfinite(epsilon), "SolverConfig: epsilon must be > 0");
    detail::require(!kappa || (*kappa > 0.0 && std::isfinite(*kappa)),
                    "SolverConfig: kappa must be > 0");
    detail::require(tolerance > 0.0, "SolverConfig: tolerance must be > 0");
    detail::require(maxIterations >= 1, "SolverConfig: maxIterations must be >= 1");
  }
};

struct DualPotentials {
  Vector f;
  Vector g;
};

struct SinkhornResult {
  TransportPlan plan;
  DualPotentials potentials;
  std::vector<double> dualTrace;  ///< empty unless SolverConfig::recordTrace
};

namespace detail {

inline double log_sum_exp(const double* x, Index n, Index stride = 1) {
  double mx = -kInfinity;
  for (Index k = 0; k < n; ++k) mx = std::max(mx, x[k * stride]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (Index k = 0; k < n; ++k) s += std::exp(x[k * stride] - mx);
  return mx + std::log(s);
}

inline std::vector<Index> support_of(const Vector& w) {
  std::vector<Index> idx;
  for (Index i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) idx.push_back(i);
  return idx;
}

struct StageOutcome {
  int iterations = 0;
  double residual = kInfinity;
  bool brokeDown = false;
};

// Iterates at fixed epsilon on strictly positive marginals, updating the
// potentials (f, g) in place. Costs may be any finite values.
inline StageOutcome sinkhorn_stage(const Vector& mu, const Vector& nu, const Matrix& cost,
                                   double eps, std::optional<double> kappa, int maxIterations,
                                   double tolerance, bool logDomain, Vector& f, Vector& g,
                                   std::vector<double>* trace) {
  const Index n = mu.size(), m = nu.size();
  const bool balanced = !kappa.has_value();
  const double lambda = balanced ? 1.0 : *kappa / (*kappa + eps);
  constexpr double kAbsorb = 30.0;  // |log scaling| bound before absorption
  constexpr double kTiny = 1e-250;  // kernel sums below this trigger a log sweep

  const Vector logmu = mu.array().log();
  const Vector lognu = nu.array().log();
  Vector logu = Vector::Zero(n), logv = Vector::Zero(m);
  Vector u = Vector::Ones(n), v = Vector::Ones(m);
  Matrix K(n, m);

  auto rebuild = [&] {
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < n; ++i)
        K(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / eps + logmu[i] + lognu[j]);
  };
  auto absorb = [&] {
    f += eps * logu;
    g += eps * logv;
    logu.setZero();
    logv.setZero();
    u.setOnes();
    v.setOnes();
  };
  // One exact Gauss-Seidel sweep in the log domain (f then g).
  std::vector<double> buf(static_cast<std::size_t>(std::max(n, m)));
  auto log_sweep = [&] {
    absorb();
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < m; ++j) buf[j] = (g[j] - cost(i, j)) / eps + lognu[j];
      f[i] = -lambda * eps * log_sum_exp(buf.data(), m);
    }
    for (Index j = 0; j < m; ++j) {
      for (Index i = 0; i < n; ++i) buf[i] = (f[i] - cost(i, j)) / eps + logmu[i];
      g[j] = -lambda * eps * log_sum_exp(buf.data(), n);
    }
    rebuild();
  };

  StageOutcome out;
  if (logDomain) {
    log_sweep();
  } else {
    rebuild();
  }

  Vector Kv(n), Ktu(m);
  int& it = out.iterations;
  double& residual = out.residual;
  while (it < maxIterations) {
    ++it;
    Kv.noalias() = K * v;
    if (balanced) {
      residual = (u.cwiseProduct(Kv) - mu).cwiseAbs().maxCoeff();
      if ((it > 1 || logDomain) && residual <= tolerance) break;
    }
    if (!(Kv.minCoeff() > kTiny && Kv.allFinite())) {
      if (!logDomain) {
        out.brokeDown = true;
        break;
      }
      const Vector F_old = f + eps * logu, G_old = g + eps * logv;
      log_sweep();
      if (!balanced)
        residual = std::max((f - F_old).cwiseAbs().maxCoeff(), (g - G_old).cwiseAbs().maxCoeff());
      continue;
    }
    Vector logu_new =
        ((lambda - 1.0) / eps) * f.array() + lambda * (logmu.array() - Kv.array().log());
    u = logu_new.array().exp();
    Ktu.noalias() = K.transpose() * u;
    if (!(Ktu.minCoeff() > kTiny && Ktu.allFinite())) {
      if (!logDomain) {
        out.brokeDown = true;
        break;
      }
      const Vector F_old = f + eps * logu, G_old = g + eps * logv;
      logu = logu_new;
      log_sweep();
      if (!balanced)
        residual = std::max((f - F_old).cwiseAbs().maxCoeff(), (g - G_old).cwiseAbs().maxCoeff());
      continue;
    }
    Vector logv_new =
        ((lambda - 1.0) / eps) * g.array() + lambda * (lognu.array() - Ktu.array().log());
    v = logv_new.array().exp();
    if (!balanced) {
      residual = eps * std::max((logu_new - logu).cwiseAbs().maxCoeff(),
                                (logv_new - logv).cwiseAbs().maxCoeff());
    }
    logu = logu_new;
    logv = logv_new;

    if (trace) {
      // Column sums are v_j (K^T u)_j after the g-update.
      const double plan_mass = v.dot(Ktu);
      const Vector F = f + eps * logu, G = g + eps * logv;
      double dual = -eps * (plan_mass - mu.sum() * nu.sum());
      if (balanced) {
        dual += F.dot(mu) + G.dot(nu);
      } else {
        const double k = *kappa;
        dual -= k * ((-F.array() / k).exp() - 1.0).matrix().dot(mu);
        dual -= k * ((-G.array() / k).exp() - 1.0).matrix().dot(nu);
      }
      trace->push_back(dual);
    }

    if (!balanced && residual <= tolerance) break;
    if (logDomain && std::max(logu.cwiseAbs().maxCoeff(), logv.cwiseAbs().maxCoeff()) > kAbsorb) {
      absorb();
      rebuild();
    }
  }
  f += eps * logu;
  g += eps * logv;
  return out;
}

// Damped Newton ascent on the dual in (f, g). The Hessian is the weighted
// bipartite Laplacian of the plan (plus the KL curvature when unbalanced);
// the balanced gauge is fixed by freezing the last entry of g. Steps are
// backtracked until the gradient norm drops without the dual decreasing.
inline StageOutcome newton_stage(const Vector& mu, const Vector& nu, const Matrix& cost,
                                 double eps, std::optional<double> kappa, int maxIterations,
                                 double tolerance, Vector& f, Vector& g,
                                 std::vector<double>* trace) {
  const Index n = mu.size(), m = nu.size();
  const bool balanced = !kappa.has_value();
  const Vector logmu = mu.array().log();
  const Vector lognu = nu.array().log();
  const double base = mu.sum() * nu.sum();

  auto plan_of = [&](const Vector& ff, const Vector& gg) {
    Matrix p(n, m);
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < n; ++i)
        p(i, j) = std::exp((ff[i] + gg[j] - cost(i, j)) / eps + logmu[i] + lognu[j]);
    return p;
  };
  auto dual_of = [&](const Vector& ff, const Vector& gg, const Matrix& p) {
    double d = -eps * (p.sum() - base);
    if (balanced) return d + ff.dot(mu) + gg.dot(nu);
    const double k = *kappa;
    d -= k * ((-ff.array() / k).exp() - 1.0).matrix().dot(mu);
    d -= k * ((-gg.array() / k).exp() - 1.0).matrix().dot(nu);
    return d;
  };

  StageOutcome out;
  Matrix p = plan_of(f, g);
  double dual = dual_of(f, g, p);
  const Index dim = balanced ? n + m - 1 : n + m;
  while (out.iterations < maxIterations) {
    const Vector r = p.rowwise().sum(), c = p.colwise().sum().transpose();
    Vector grad(n + m);
    if (balanced) {
      grad << mu - r, nu - c;
      out.residual = grad.cwiseAbs().maxCoeff();
    } else {
      const Vector tr = mu.cwiseProduct((-f.array() / *kappa).exp().matrix());
      const Vector tc = nu.cwiseProduct((-g.array() / *kappa).exp().matrix());
      grad << tr - r, tc - c;
      out.residual = grad.cwiseAbs().maxCoeff();
    }
    if (!std::isfinite(out.residual)) {
      out.brokeDown = true;
      break;
    }
    if (out.residual <= tolerance) break;
    ++out.iterations;

    Matrix H = Matrix::Zero(dim, dim);
    for (Index i = 0; i < n; ++i) H(i, i) = r[i] / eps;
    for (Index j = 0; j < m && n + j < dim; ++j) H(n + j, n + j) = c[j] / eps;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m && n + j < dim; ++j) {
        H(i, n + j) = p(i, j) / eps;
        H(n + j, i) = p(i, j) / eps;
      }
    if (!balanced) {
      for (Index i = 0; i < n; ++i) H(i, i) += mu[i] * std::exp(-f[i] / *kappa) / *kappa;
      for (Index j = 0; j < m; ++j) H(n + j, n + j) += nu[j] * std::exp(-g[j] / *kappa) / *kappa;
    }
    // The plan graph can be nearly disconnected, which makes H extremely
    // ill-conditioned; solve in its eigenbasis with a relative floor.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
    if (eig.info() != Eigen::Success) {
      out.brokeDown = true;
      break;
    }
    const Vector lam = eig.eigenvalues();
    const double floor = std::max(lam.maxCoeff(), 0.0) * 1e-15;
    Vector coef = eig.eigenvectors().transpose() * grad.head(dim);
    for (Index k = 0; k < dim; ++k) coef[k] = lam[k] > floor ? coef[k] / lam[k] : 0.0;
    Vector step = eig.eigenvectors() * coef;
    if (!step.allFinite()) {
      out.brokeDown = true;
      break;
    }
    const double slope = grad.head(dim).dot(step);
    if (!(slope > 0.0)) {
      out.brokeDown = true;
      break;
    }
    // Merit: squared gradient norm must drop, the dual must not decrease
    // beyond rounding.
    const double gnorm2 = grad.squaredNorm();
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      Vector nf = f + t * step.head(n);
      Vector ng = g;
      ng.head(dim - n) += t * step.tail(dim - n);
      Matrix np = plan_of(nf, ng);
      if (!np.allFinite()) continue;
      const double nd = dual_of(nf, ng, np);
      if (nd < dual - 1e-13 * (1.0 + std::abs(dual))) continue;
      Vector ngrad(n + m);
      if (balanced) {
        ngrad << mu - np.rowwise().sum(), nu - np.colwise().sum().transpose();
      } else {
        ngrad << mu.cwiseProduct((-nf.array() / *kappa).exp().matrix()) - np.rowwise().sum(),
            nu.cwiseProduct((-ng.array() / *kappa).exp().matrix()) - np.colwise().sum().transpose();
      }
      if (ngrad.squaredNorm() <= (1.0 - 1e-4 * t) * gnorm2) {
        f = std::move(nf);
        g = std::move(ng);
        p = std::move(np);
        dual = std::max(dual, nd);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.brokeDown = true;
      break;
    }
    if (trace) trace->push_back(dual);
  }
  return out;
}

// Solver on strictly positive marginals. In the log domain without a warm
// start, epsilon is annealed geometrically from the cost range down to the
// target; intermediate stages only seed the potentials of the final one.
inline SinkhornResult sinkhorn_positive(const Vector& mu, const Vector& nu, const Matrix& cost,
                                        const SolverConfig& cfg,
                                        const DualPotentials* warm) {
  const Index n = mu.size(), m = nu.size();
  const double eps = cfg.epsilon;

  Vector f = Vector::Zero(n), g = Vector::Zero(m);
  const bool warm_ok = warm && warm->f.size() == n && warm->g.size() == m &&
                       warm->f.allFinite() && warm->g.allFinite();
  if (warm_ok) {
    f = warm->f;
    g = warm->g;
  }

  SinkhornResult out;
  int used = 0;
  if (cfg.logDomain && cfg.epsilonScaling && !warm_ok) {
    constexpr double kFactor = 0.5;
    constexpr int kStageIterations = 1000;
    const double span = cost.maxCoeff() - cost.minCoeff();
    std::vector<double> schedule;
    for (double e = span; e > eps / kFactor; e *= kFactor) schedule.push_back(e);
    for (double e : schedule) {
      const auto st = sinkhorn_stage(mu, nu, cost, e, cfg.kappa,
                                     std::min(kStageIterations, cfg.maxIterations - used),
                                     std::max(cfg.tolerance, 1e-6 * e), true, f, g, nullptr);
      used += st.iterations;
      if (used >= cfg.maxIterations) break;
    }
  }
  // Sinkhorn first; if it stalls, Newton polish, then Sinkhorn again with
  // whatever budget is left.
  constexpr int kSinkhornBeforeNewton = 2000;
  constexpr Index kNewtonLimit = 1500;
  const bool try_newton = cfg.logDomain && cfg.newtonPolish && n + m <= kNewtonLimit;
  std::vector<double>* trace = cfg.recordTrace ? &out.dualTrace : nullptr;
  const int first_budget = std::max(1, cfg.maxIterations - used);
  auto st = sinkhorn_stage(mu, nu, cost, eps, cfg.kappa,
                           try_newton ? std::min(first_budget, kSinkhornBeforeNewton) : first_budget,
                           cfg.tolerance, cfg.logDomain, f, g, trace);
  used += st.iterations;
  if (try_newton && !(st.residual <= cfg.tolerance) && used < cfg.maxIterations) {
    Vector f0 = f, g0 = g;
    const auto nt = newton_stage(mu, nu, cost, eps, cfg.kappa, std::min(200, cfg.maxIterations - used),
                                 cfg.tolerance, f, g, trace);
    used += nt.iterations;
    if (nt.brokeDown && !std::isfinite(nt.residual)) {
      f = std::move(f0);
      g = std::move(g0);
    }
    if (!(nt.residual <= cfg.tolerance) && used < cfg.maxIterations) {
      st = sinkhorn_stage(mu, nu, cost, eps, cfg.kappa, cfg.maxIterations - used, cfg.tolerance,
                          true, f, g, trace);
      used += st.iterations;
    } else {
      st.residual = nt.residual;
      st.brokeDown = false;
    }
  }
  double residual = st.residual;

  const Vector logmu = mu.array().log();
  const Vector lognu = nu.array().log();
  Matrix plan(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i)
      plan(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / eps + logmu[i] + lognu[j]);

  const bool balanced = !cfg.kappa.has_value();
  if (balanced && !st.brokeDown) residual = marginal_residual(plan, mu, nu);
  if (st.brokeDown || !plan.allFinite()) residual = kInfinity;

  out.potentials.f = std::move(f);
  out.potentials.g = std::move(g);
  out.plan.coupling = std::move(plan);
  out.plan.sourceWeights = mu;
  out.plan.targetWeights = nu;
  out.plan.epsilon = eps;
  out.plan.kappa = cfg.kappa;
  out.plan.iterations = used;
  out.plan.convergedResidual = residual;
  out.plan.converged = std::isfinite(residual) && residual <= cfg.tolerance;
  return out;
}

inline SinkhornResult sinkhorn(const Vector& mu, const Vector& nu, const Matrix& cost,
                               const SolverConfig& cfg, const DualPotentials* warm) {
  cfg.validate();
  require(cost.rows() == mu.size() && cost.cols() == nu.size(),
          "sinkhorn: cost is " + shape(cost.rows(), cost.cols()) + ", marginals are " +
              std::to_string(mu.size()) + " and " + std::to_string(nu.size()));
  require(cost.allFinite(), "sinkhorn: cost has non-finite entries");
  require((mu.array() >= 0.0).all() && (nu.array() >= 0.0).all(),
          "sinkhorn: negative marginal weight");
  require(mu.sum() > 0.0 && nu.sum() > 0.0, "sinkhorn: zero marginal mass");

  const auto rows = support_of(mu), cols = support_of(nu);
  if (static_cast<Index>(rows.size()) == mu.size() && static_cast<Index>(cols.size()) == nu.size())
    return sinkhorn_positive(mu, nu, cost, cfg, warm);

  // Zero-mass atoms carry no plan mass; solve on the support and embed.
  DualPotentials sub_warm;
  if (warm && warm->f.size() == mu.size() && warm->g.size() == nu.size())
    sub_warm = {subvector(warm->f, rows), subvector(warm->g, cols)};
  auto sub = sinkhorn_positive(subvector(mu, rows), subvector(nu, cols),
                               submatrix(cost, rows, cols), cfg,
                               sub_warm.f.size() ? &sub_warm : nullptr);
  SinkhornResult out;
  out.plan = sub.plan;
  out.plan.coupling = Matrix::Zero(mu.size(), nu.size());
  out.plan.sourceWeights = mu;
  out.plan.targetWeights = nu;
  out.potentials.f = Vector::Zero(mu.size());
  out.potentials.g = Vector::Zero(nu.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    out.potentials.f[rows[a]] = sub.potentials.f[static_cast<Index>(a)];
    for (std::size_t b = 0; b < cols.size(); ++b)
      out.plan.coupling(rows[a], cols[b]) =
          sub.plan.coupling(static_cast<Index>(a), static_cast<Index>(b));
  }
  for (std::size_t b = 0; b < cols.size(); ++b)
    out.potentials.g[cols[b]] = sub.potentials.g[static_cast<Index>(b)];
  out.dualTrace = std::move(sub.dualTrace);
  return out;
}

}  // namespace detail

/// Balanced entropic OT between probability vectors.
///
/// Throws InvalidArgument when either marginal does not sum to one (1e-9) or
/// when cfg.kappa is set. Non-convergence is not an error: the last iterate
/// is returned with plan.converged == false.
inline SinkhornResult solve_entropic_ot(const Vector& mu, const Vector& nu, const Matrix& cost,
                                        const SolverConfig& cfg,
                                        const DualPotentials* warm = nullptr) {
  detail::require(!cfg.kappa, "solve_entropic_ot: kappa must be absent (use solve_entropic_uot)");
  detail::require(std::abs(mu.sum() - 1.0) <= 1e-9 && std::abs(nu.sum() - 1.0) <= 1e-9,
                  "solve_entropic_ot: marginals must be probability vectors (masses " +
                      std::to_string(mu.sum()) + ", " + std::to_string(nu.sum()) + ")");
  return detail::sinkhorn(mu, nu, cost, cfg, warm);
}

inline SinkhornResult solve_entropic_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                        const Matrix& cost, const SolverConfig& cfg) {
  return solve_entropic_ot(mu.weights(), nu.weights(), cost, cfg);
}

/// Unbalanced entropic OT: KL(P1 pi, mu) and KL(P2 pi, nu) penalized by kappa.
inline SinkhornResult solve_entropic_uot(const Vector& mu, const Vector& nu, const Matrix& cost,
                                         const SolverConfig& cfg,
                                         const DualPotentials* warm = nullptr) {
  detail::require(cfg.kappa.has_value(), "solve_entropic_uot: kappa is required");
  return detail::sinkhorn(mu, nu, cost, cfg, warm);
}

inline SinkhornResult solve_entropic_uot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const Matrix& cost, const SolverConfig& cfg) {
  return solve_entropic_uot(mu.weights(), nu.weights(), cost, cfg);
}

/// <C, pi> + eps KL(pi, mu (x) nu).
inline double ot_objective(const Matrix& plan, const Matrix& cost, const Vector& mu,
                           const Vector& nu, double epsilon) {
  detail::require(plan.rows() == cost.rows() && plan.cols() == cost.cols() &&
                      plan.rows() == mu.size() && plan.cols() == nu.size(),
                  "ot_objective: inconsistent shapes");
  const double lin = cost.cwiseProduct(plan).sum();
  const double kl = kl_divergence(plan, product_coupling(mu, nu));
  return lin + epsilon * kl;
}

/// Balanced objective plus kappa (KL(P1 pi, mu) + KL(P2 pi, nu)).
inline double uot_objective(const Matrix& plan, const Matrix& cost, const Vector& mu,
                            const Vector& nu, double epsilon, double kappa) {
  auto [r, c] = marginals(plan);
  return ot_objective(plan, cost, mu, nu, epsilon) +
         kappa * (kl_divergence(r, mu) + kl_divergence(c, nu));
}

/// Recovers potentials with pi = exp((f + g - C) / eps) (mu (x) nu), gauge
/// fixed by <f, mu> = 0. Least-squares in the additive two-way model, hence
/// exact whenever the plan is of kernel form. Atoms of zero mass get 0.
inline DualPotentials kernel_form(const Matrix& plan, const Matrix& cost, const Vector& mu,
                                  const Vector& nu, double epsilon) {
  detail::require(plan.rows() == mu.size() && plan.cols() == nu.size() &&
                      cost.rows() == plan.rows() && cost.cols() == plan.cols(),
                  "kernel_form: inconsistent shapes");
  detail::require(epsilon > 0.0, "kernel_form: epsilon must be > 0");
  const auto rows = detail::support_of(mu), cols = detail::support_of(nu);
  const double mmu = mu.sum(), mnu = nu.sum();

  Matrix s = Matrix::Zero(plan.rows(), plan.cols());
  for (Index i : rows) {
    for (Index j : cols) {
      const double p = plan(i, j);
      if (!(p > 0.0))
        throw InvalidArgument("kernel_form: plan entry (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") is zero on the support of mu (x) nu");
      s(i, j) = epsilon * std::log(p / (mu[i] * nu[j])) + cost(i, j);
    }
  }
  DualPotentials out{Vector::Zero(plan.rows()), Vector::Zero(plan.cols())};
  for (Index j : cols) {
    double acc = 0.0;
    for (Index i : rows) acc += mu[i] * s(i, j);
    out.g[j] = acc / mmu;
  }
  for (Index i : rows) {
    double acc = 0.0;
    for (Index j : cols) acc += nu[j] * (s(i, j) - out.g[j]);
    out.f[i] = acc / mnu;
  }
  return out;
}

/// exp((f_i + g_j - C_ij) / eps) mu_i nu_j.
inline Matrix reconstruct_plan(const DualPotentials& pot, const Matrix& cost, const Vector& mu,
                               const Vector& nu, double epsilon) {
  Matrix p(mu.size(), nu.size());
  for (Index j = 0; j < nu.size(); ++j)
    for (Index i = 0; i < mu.size(); ++i)
      p(i, j) = std::exp((pot.f[i] + pot.g[j] - cost(i, j)) / epsilon) * mu[i] * nu[j];
  return p;
}

}  // namespace gwt

#endif  // GWT_SINKHORN_HPP_
