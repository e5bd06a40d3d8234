#ifndef GWT_GW_HPP_
#define GWT_GW_HPP_

// Entropic Gromov-Wasserstein transport: balanced, unbalanced and fused.
//
// The objective for a coupling pi between (X, dX, mu) and (Y, dY, nu) is
//
//   sum_{ijkl} (dX_ik - dY_jl)^2 pi_ij pi_kl
//     + eps   KL(pi (x) pi, (mu (x) nu) (x) (mu (x) nu))
//     + kappa [KL(P1 pi (x) P1 pi, mu (x) mu) + KL(P2 pi (x) P2 pi, nu (x) nu)]   (unbalanced)
//     + labelWeight sum_ij dA(lX_i, lY_j) pi_ij                                     (fused)
//
// and it is minimized by block-coordinate relaxation: with gamma frozen the
// objective is an entropic (unbalanced) OT problem in pi whose cost is the
// linearized distortion C(gamma) (plus the label cost), whose regularization
// is eps * m(gamma) and whose marginal penalty is kappa * m(gamma). For a
// unit-mass balanced gamma the inner regularization is therefore eps, which
// is the same step as regularizing the gradient 2 C(gamma) with 2 eps. In the
// unbalanced case the per-entry constants of the frozen quadratic KL terms
// enter the cost, and the new iterate is rescaled to mass sqrt(m(gamma) m(pi))
// so that both arguments of the relaxation carry the same mass.

#include "gwt/measures.hpp"
#include "gwt/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace gwt {

/// Sum_{ijkl} (dX_ik - dY_jl)^2 pi_ij pi_kl via the three-term expansion,
/// clamped at 0 against cancellation.
inline double gw_distortion(const Matrix& plan, const Matrix& dX, const Matrix& dY) {
  detail::require(dX.rows() == plan.rows() && dX.cols() == plan.rows() &&
                      dY.rows() == plan.cols() && dY.cols() == plan.cols(),
                  "gw_distortion: inconsistent shapes");
  const Vector p = plan.rowwise().sum();
  const Vector q = plan.colwise().sum().transpose();
  const Matrix dX2 = dX.array().square().matrix();
  const Matrix dY2 = dY.array().square().matrix();
  const double cross = (dX * plan * dY).cwiseProduct(plan).sum();
  return std::max(0.0, p.dot(dX2 * p) + q.dot(dY2 * q) - 2.0 * cross);
}

/// C_ij = sum_kl (dX_ik - dY_jl)^2 pi_kl, the distortion with one plan frozen.
inline Matrix linearized_cost(const Matrix& plan, const Matrix& dX, const Matrix& dY) {
  detail::require(dX.rows() == plan.rows() && dX.cols() == plan.rows() &&
                      dY.rows() == plan.cols() && dY.cols() == plan.cols(),
                  "linearized_cost: inconsistent shapes");
  const Vector p = plan.rowwise().sum();
  const Vector q = plan.colwise().sum().transpose();
  const Vector a = dX.array().square().matrix() * p;
  const Vector b = dY.array().square().matrix() * q;
  Matrix c = -2.0 * (dX * plan * dY);
  c.colwise() += a;
  c.rowwise() += b.transpose();
  return c;
}

/// Distortion of the sub-plan on sourceIndices x targetIndices; 0 when
/// either index set is empty. The sub-plan is not renormalized.
inline double gw_distortion_restricted(const Matrix& plan, const Matrix& dX, const Matrix& dY,
                                       const std::vector<Index>& sourceIndices,
                                       const std::vector<Index>& targetIndices) {
  if (sourceIndices.empty() || targetIndices.empty()) return 0.0;
  for (Index i : sourceIndices)
    detail::require(i >= 0 && i < plan.rows(), "gw_distortion_restricted: source index out of range");
  for (Index j : targetIndices)
    detail::require(j >= 0 && j < plan.cols(), "gw_distortion_restricted: target index out of range");
  return gw_distortion(submatrix(plan, sourceIndices, targetIndices),
                       submatrix(dX, sourceIndices, sourceIndices),
                       submatrix(dY, targetIndices, targetIndices));
}

/// dA_ij = |lX_i - lY_j|_2.
inline Matrix label_distance(const Matrix& sourceLabels, const Matrix& targetLabels) {
  detail::require(sourceLabels.cols() == targetLabels.cols(),
                  "label_distance: label dimensions differ");
  return cross_distance_matrix(sourceLabels, targetLabels);
}

struct GwProblem {
  MetricMeasureSpace source;
  MetricMeasureSpace target;
  std::optional<Matrix> sourceLabels;  ///< both or neither, for the fused solver
  std::optional<Matrix> targetLabels;
  double epsilon = 1e-3;
  std::optional<double> kappa;
  double labelWeight = 1.0;
  SolverConfig inner;  ///< epsilon and kappa are overwritten per outer step
  std::optional<Matrix> initPlan;
  int maxOuterIterations = 200;
  double outerTolerance = 1e-7;  ///< max entrywise plan change between outer steps
  bool normalizeDistances = false;  ///< divide both metrics by the source's largest distance
  bool recordObjective = false;
  /// Without initPlan: solve at epsilon0, epsilon0 / 2, ... down to epsilon,
  /// each stage warm-started from the last; epsilon0 is the mean first-step
  /// cost under the initial plan.
  bool epsilonAnnealing = true;

  bool fused() const { return sourceLabels.has_value() || targetLabels.has_value(); }
};

struct GwResult {
  TransportPlan plan;
  DualPotentials potentials;  ///< of the last inner solve, w.r.t. finalCost
  Matrix finalCost;           ///< cost of the last inner solve
  double innerEpsilon = 0.0;  ///< regularization of the last inner solve
  double massScale = 1.0;     ///< factor the input weights were divided by
  double lastChange = 0.0;
  int innerIterations = 0;
  bool innerConverged = true;
  std::vector<double> objectiveTrace;  ///< gw_objective after every outer step
};

namespace detail {

struct PreparedGw {
  Vector mu, nu;
  Matrix dX, dY;
  std::optional<Matrix> labelCost;
  double massScale = 1.0;
};

inline PreparedGw prepare(const GwProblem& pb) {
  require(pb.epsilon > 0.0, "GwProblem: epsilon must be > 0");
  require(!pb.kappa || *pb.kappa > 0.0, "GwProblem: kappa must be > 0");
  require(pb.labelWeight >= 0.0, "GwProblem: labelWeight must be >= 0");
  PreparedGw out;
  out.mu = pb.source.weights();
  out.nu = pb.target.weights();
  if (!pb.kappa) {
    // Balanced transport needs probability marginals.
    const double ms = out.mu.sum(), mt = out.nu.sum();
    out.massScale = ms;
    out.mu /= ms;
    out.nu /= mt;
  }
  out.dX = pb.source.distances();
  out.dY = pb.target.distances();
  if (pb.normalizeDistances) {
    const double s = out.dX.maxCoeff();
    if (s > 0.0) {
      out.dX /= s;
      out.dY /= s;
    }
  }
  if (pb.fused()) {
    require(pb.sourceLabels && pb.targetLabels, "GwProblem: fused mode needs labels on both sides");
    require(pb.sourceLabels->rows() == pb.source.size() &&
                pb.targetLabels->rows() == pb.target.size(),
            "GwProblem: label count differs from point count");
    out.labelCost = label_distance(*pb.sourceLabels, *pb.targetLabels);
  }
  return out;
}

// sum_i a_i log(a_i / b_i) with 0 log 0 = 0.
inline double entropy_against(const Vector& a, const Vector& b) {
  double acc = 0.0;
  for (Index i = 0; i < a.size(); ++i)
    if (a[i] > 0.0) acc += a[i] * std::log(a[i] / b[i]);
  return acc;
}

inline double objective(const Matrix& plan, const PreparedGw& pr, const GwProblem& pb) {
  double val = gw_distortion(plan, pr.dX, pr.dY);
  val += pb.epsilon * quadratic_kl(plan, product_coupling(pr.mu, pr.nu));
  if (pb.kappa) {
    auto [p, q] = marginals(plan);
    val += *pb.kappa * (quadratic_kl(p, pr.mu) + quadratic_kl(q, pr.nu));
  }
  if (pr.labelCost) val += pb.labelWeight * pr.labelCost->cwiseProduct(plan).sum();
  return val;
}

inline GwResult solve_bcd(const GwProblem& pb) {
  const PreparedGw pr = prepare(pb);
  const Index n = pr.mu.size(), m = pr.nu.size();
  const bool balanced = !pb.kappa.has_value();

  Matrix plan;
  if (pb.initPlan) {
    require(pb.initPlan->rows() == n && pb.initPlan->cols() == m,
            "GwProblem: initPlan has the wrong shape");
    require((pb.initPlan->array() >= 0.0).all() && pb.initPlan->sum() > 0.0,
            "GwProblem: initPlan must be nonnegative with positive mass");
    plan = *pb.initPlan;
  } else {
    plan = product_coupling(pr.mu, pr.nu);
    if (!balanced) plan /= std::sqrt(pr.mu.sum() * pr.nu.sum());
  }

  GwResult res;
  res.massScale = pr.massScale;
  DualPotentials pot;
  bool have_pot = false;
  int outer = 0, stageOuter = 0;
  double change = kInfinity;
  SolverConfig cfg = pb.inner;
  const Matrix musnu = product_coupling(pr.mu, pr.nu);

  std::vector<double> schedule;
  if (pb.epsilonAnnealing && !pb.initPlan) {
    Matrix cost0 = linearized_cost(plan, pr.dX, pr.dY);
    if (pr.labelCost) cost0 += pb.labelWeight * *pr.labelCost;
    for (double e = cost0.cwiseProduct(plan).sum() / plan.sum(); e > 2.0 * pb.epsilon; e *= 0.5)
      schedule.push_back(e);
  }
  schedule.push_back(pb.epsilon);

  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    change = kInfinity;
    stageOuter = 0;
    while (stageOuter < pb.maxOuterIterations) {
      ++stageOuter;
      ++outer;
      const double mass = plan.sum();
      Matrix cost = linearized_cost(plan, pr.dX, pr.dY);
      if (pr.labelCost) cost += pb.labelWeight * *pr.labelCost;
      cfg.epsilon = eps * mass;
      cfg.kappa.reset();
      if (!balanced) {
        auto [p, q] = marginals(plan);
        const double shift = *pb.kappa * (entropy_against(p, pr.mu) + entropy_against(q, pr.nu)) +
                             eps * entropy_against(plan.reshaped(), musnu.reshaped());
        cost.array() += shift;
        cfg.kappa = *pb.kappa * mass;
      }
      SinkhornResult step = sinkhorn(pr.mu, pr.nu, cost, cfg, have_pot ? &pot : nullptr);
      Matrix next = std::move(step.plan.coupling);
      if (!balanced) {
        const double mnext = next.sum();
        if (mnext > 0.0) next *= std::sqrt(mass / mnext);
      }
      change = (next - plan).cwiseAbs().maxCoeff();
      plan = std::move(next);
      pot = std::move(step.potentials);
      have_pot = true;
      res.innerIterations += step.plan.iterations;
      if (last) {
        res.innerConverged = res.innerConverged && step.plan.converged;
        res.finalCost = std::move(cost);
        res.innerEpsilon = cfg.epsilon;
        if (pb.recordObjective) res.objectiveTrace.push_back(objective(plan, pr, pb));
      }
      if (change < pb.outerTolerance) break;
    }
  }

  res.potentials = std::move(pot);
  res.lastChange = change;
  res.plan.coupling = std::move(plan);
  res.plan.sourceWeights = pr.mu;
  res.plan.targetWeights = pr.nu;
  res.plan.epsilon = pb.epsilon;
  res.plan.kappa = pb.kappa;
  res.plan.iterations = outer;
  res.plan.convergedResidual = change;
  res.plan.converged = change < pb.outerTolerance && res.innerConverged;
  return res;
}

}  // namespace detail

/// Objective of `plan` for the given problem (after the same weight and
/// distance preprocessing the solvers apply).
inline double gw_objective(const Matrix& plan, const GwProblem& problem) {
  const auto pr = detail::prepare(problem);
  detail::require(plan.rows() == pr.mu.size() && plan.cols() == pr.nu.size(),
                  "gw_objective: plan shape does not match the spaces");
  return detail::objective(plan, pr, problem);
}

/// Balanced entropic GW. Marginals are normalized to probability vectors;
/// GwResult::massScale records the source mass they were divided by.
inline GwResult solve_entropic_gw(const GwProblem& problem) {
  detail::require(!problem.kappa, "solve_entropic_gw: kappa must be absent");
  detail::require(!problem.fused(), "solve_entropic_gw: labels given, use solve_entropic_fgw");
  return detail::solve_bcd(problem);
}

/// Unbalanced entropic GW (quadratic KL marginal penalties).
inline GwResult solve_entropic_ugw(const GwProblem& problem) {
  detail::require(problem.kappa.has_value(), "solve_entropic_ugw: kappa is required");
  detail::require(!problem.fused(), "solve_entropic_ugw: labels given, use solve_entropic_fgw");
  return detail::solve_bcd(problem);
}

/// Fused entropic GW, balanced or unbalanced depending on problem.kappa.
inline GwResult solve_entropic_fgw(const GwProblem& problem) {
  detail::require(problem.sourceLabels && problem.targetLabels,
                  "solve_entropic_fgw: labels required on both sides");
  detail::require(problem.sourceLabels->cols() == problem.targetLabels->cols(),
                  "solve_entropic_fgw: label dimensions differ");
  return detail::solve_bcd(problem);
}

}  // namespace gwt

#endif  // GWT_GW_HPP_
