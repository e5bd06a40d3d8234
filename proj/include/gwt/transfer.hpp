#ifndef GWT_TRANSFER_HPP_
#define GWT_TRANSFER_HPP_

// Transfer operators estimated from transport plans, and their spectral
// bipartitioning into coherent pairs.
//
// For a coupling pi with marginal weights mu (source) and nu (target):
//   kernel   k = D_mu^-1 pi D_nu^-1          (n x m)
//   operator K = D_nu^-1 pi^T                (m x n),  (K phi)(y) = sum_x k(x, y) phi(x) mu(x)
//
// The singular problem of K between L2_mu and L2_nu is solved through the
// plain matrix M = D_mu^-1/2 pi D_nu^-1/2: if M b = s a and M^T a = s b then
// phi = D_mu^-1/2 a and psi = D_nu^-1/2 b are singular functions of K with
// respect to the weighted inner products. The relaxed bipartition problem
// constrains phi and psi to be orthogonal to constants, so its maximizer is
// the top singular pair of P M Q where P and Q project out sqrt(mu) and
// sqrt(nu). For balanced plans this is the second singular pair of M.

#include "gwt/gw.hpp"
#include "gwt/measures.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace gwt {

/// Which weights define L2_mu and L2_nu for an operator built from a plan.
enum class MarginalSource {
  Coupling,  ///< row and column sums of the coupling itself
  Input,     ///< the marginals the plan was solved against
};

struct TransferOperator {
  Matrix coupling;        ///< n x m
  Matrix kernel;          ///< n x m
  Matrix operatorMatrix;  ///< m x n
  Vector sourceWeights;
  Vector targetWeights;

  Index source_size() const { return kernel.rows(); }
  Index target_size() const { return kernel.cols(); }
};

/// Builds k and K. Atoms of zero weight are excluded from the support; a
/// zero-weight atom that carries coupled mass is an error.
inline TransferOperator build_transfer(const Matrix& coupling, const Vector& mu, const Vector& nu) {
  detail::require(coupling.rows() == mu.size() && coupling.cols() == nu.size(),
                  "build_transfer: coupling is " +
                      detail::shape(coupling.rows(), coupling.cols()) + ", weights are " +
                      std::to_string(mu.size()) + " and " + std::to_string(nu.size()));
  detail::require((mu.array() >= 0.0).all() && (nu.array() >= 0.0).all(),
                  "build_transfer: negative weight");
  const Index n = mu.size(), m = nu.size();
  TransferOperator op;
  op.coupling = coupling;
  op.sourceWeights = mu;
  op.targetWeights = nu;
  op.kernel = Matrix::Zero(n, m);
  op.operatorMatrix = Matrix::Zero(m, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      const double p = coupling(i, j);
      detail::require(p >= 0.0, "build_transfer: negative coupling entry");
      if (mu[i] == 0.0 || nu[j] == 0.0) {
        if (p > 0.0)
          throw InvalidArgument("build_transfer: atom with zero weight carries mass at (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
        continue;
      }
      op.kernel(i, j) = p / (mu[i] * nu[j]);
      op.operatorMatrix(j, i) = p / nu[j];
    }
  }
  return op;
}

inline TransferOperator build_transfer(const TransportPlan& plan,
                                       MarginalSource source = MarginalSource::Coupling) {
  if (source == MarginalSource::Input)
    return build_transfer(plan.coupling, plan.sourceWeights, plan.targetWeights);
  auto [p, q] = marginals(plan.coupling);
  return build_transfer(plan.coupling, p, q);
}

/// (K psi)(y) = sum_x k(x, y) psi(x) mu(x).
inline Vector apply_operator(const TransferOperator& op, const Vector& psi) {
  detail::require(psi.size() == op.source_size(),
                  "apply_operator: function has " + std::to_string(psi.size()) +
                      " values, source has " + std::to_string(op.source_size()) + " points");
  return op.operatorMatrix * psi;
}

// ---------------------------------------------------------------------------
// Singular value decomposition helpers

struct SingularTriples {
  Vector values;  ///< descending
  Matrix left;    ///< columns
  Matrix right;   ///< columns
};

/// Top-k singular triples by block subspace iteration. Deterministic: the
/// starting block is drawn from a fixed-seed generator.
inline SingularTriples truncated_svd(const Matrix& a, Index k, int maxIterations = 5000,
                                     double tolerance = 1e-13) {
  const Index r = std::min<Index>({a.rows(), a.cols(), k + 6});
  std::mt19937_64 gen(0x5eed);
  std::normal_distribution<double> normal;
  Matrix q(a.rows(), r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < a.rows(); ++i) q(i, j) = normal(gen);
  q = Eigen::HouseholderQR<Matrix>(q).householderQ() * Matrix::Identity(a.rows(), r);

  Vector prev = Vector::Zero(r);
  Eigen::JacobiSVD<Matrix> small;
  for (int it = 0; it < maxIterations; ++it) {
    Matrix z = a * (a.transpose() * q);
    q = Eigen::HouseholderQR<Matrix>(z).householderQ() * Matrix::Identity(a.rows(), r);
    small.compute(q.transpose() * a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector s = small.singularValues();
    const double delta = (s.head(std::min(k, r)) - prev.head(std::min(k, r))).cwiseAbs().maxCoeff();
    prev = s;
    if (it > 2 && delta <= tolerance * std::max(1.0, s[0])) break;
  }
  const Index kk = std::min(k, r);
  SingularTriples out;
  out.values = small.singularValues().head(kk);
  out.left = (q * small.matrixU()).leftCols(kk);
  out.right = small.matrixV().leftCols(kk);
  return out;
}

/// All singular triples of a dense matrix.
inline SingularTriples dense_svd(const Matrix& a) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.singularValues(), svd.matrixU(), svd.matrixV()};
}

// ---------------------------------------------------------------------------
// Spectral bipartition

struct SpectralPartition {
  Vector phi;       ///< right singular function on the source, |phi|_mu = 1
  Vector psi;       ///< left singular function on the target, |psi|_nu = 1
  double sigma = 0.0;   ///< largest singular value subject to orthogonality to constants
  double sigma1 = 0.0;  ///< largest singular value of K
  double leadingResidual = 0.0;  ///< how far (1_X, 1_Y), normalized, is from a singular pair for sigma1
  std::vector<int> sourcePartition;  ///< class 0 or 1 per source point
  std::vector<int> targetPartition;
  std::array<double, 2> massBalance{};
  std::array<double, 2> coherenceResidual{};
  std::optional<std::array<double, 2>> shapeScores;
  bool degenerate = false;  ///< sigma numerically equal to sigma1
  bool ambiguous = false;   ///< top constrained singular value is repeated
  double threshold = 0.0;   ///< class 0 is {phi >= threshold}; nonzero only when ambiguous
  std::vector<std::string> warnings;

  std::vector<Index> source_class(int k) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < sourcePartition.size(); ++i)
      if (sourcePartition[i] == k) out.push_back(static_cast<Index>(i));
    return out;
  }
  std::vector<Index> target_class(int k) const {
    std::vector<Index> out;
    for (std::size_t j = 0; j < targetPartition.size(); ++j)
      if (targetPartition[j] == k) out.push_back(static_cast<Index>(j));
    return out;
  }
};

struct SpectralOptions {
  Index denseLimit = 512;            ///< dense SVD below this size, subspace iteration above
  double degeneracyTolerance = 1e-9;  ///< relative gap below which singular values count as equal
};

/// |K 1_{X_k} - 1_{Y_k}|_nu and |mu(X_k) - nu(Y_k)| for k = 0, 1.
inline void coherence_report(const TransferOperator& op, SpectralPartition& part) {
  detail::require(static_cast<Index>(part.sourcePartition.size()) == op.source_size() &&
                      static_cast<Index>(part.targetPartition.size()) == op.target_size(),
                  "coherence_report: partition sizes do not match the operator");
  for (int k = 0; k < 2; ++k) {
    Vector ind_x(op.source_size()), ind_y(op.target_size());
    for (Index i = 0; i < ind_x.size(); ++i) ind_x[i] = part.sourcePartition[i] == k ? 1.0 : 0.0;
    for (Index j = 0; j < ind_y.size(); ++j) ind_y[j] = part.targetPartition[j] == k ? 1.0 : 0.0;
    const Vector diff = apply_operator(op, ind_x) - ind_y;
    part.coherenceResidual[k] = std::sqrt(diff.array().square().matrix().dot(op.targetWeights));
    part.massBalance[k] = std::abs(ind_x.dot(op.sourceWeights) - ind_y.dot(op.targetWeights));
  }
}

/// Per-class residuals for an arbitrary pair of 0/1 assignments.
inline std::pair<std::array<double, 2>, std::array<double, 2>> coherence_report(
    const TransferOperator& op, const std::vector<int>& sourcePartition,
    const std::vector<int>& targetPartition) {
  SpectralPartition p;
  p.sourcePartition = sourcePartition;
  p.targetPartition = targetPartition;
  coherence_report(op, p);
  return {p.coherenceResidual, p.massBalance};
}

namespace detail {

inline Vector inv_sqrt_or_zero(const Vector& w) {
  Vector out(w.size());
  for (Index i = 0; i < w.size(); ++i) out[i] = w[i] > 0.0 ? 1.0 / std::sqrt(w[i]) : 0.0;
  return out;
}

// Cut value for a function that is constant on disconnected blocks: the
// midpoint of the gap that puts half of the distinct values on each side,
// the more even mass split breaking ties.
inline double balanced_cut(const Vector& phi, const Vector& mu) {
  const Index n = phi.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index x, Index y) { return phi[x] < phi[y]; });
  const double tol = 1e-9 * (phi.maxCoeff() - phi.minCoeff());
  std::vector<Index> gaps;  // positions k with a gap after order[k]
  std::vector<double> massBelow;
  double below = 0.0;
  for (Index k = 0; k + 1 < n; ++k) {
    below += mu[order[k]];
    if (phi[order[k + 1]] - phi[order[k]] > tol) {
      gaps.push_back(k);
      massBelow.push_back(below);
    }
  }
  if (gaps.empty()) return 0.0;
  const double groups = static_cast<double>(gaps.size() + 1), total = mu.sum();
  std::size_t best = 0;
  auto key = [&](std::size_t g) {
    return std::make_pair(std::abs(2.0 * static_cast<double>(g + 1) - groups), std::abs(2.0 * massBelow[g] - total));
  };
  for (std::size_t g = 1; g < gaps.size(); ++g)
    if (key(g) < key(best)) best = g;
  return 0.5 * (phi[order[gaps[best]]] + phi[order[gaps[best] + 1]]);
}

}  // namespace detail

/// Sign-thresholded bipartition from the second singular pair of K.
///
/// Class 0 is {phi >= 0} on the source and {psi >= 0} on the target, with the
/// joint sign of (phi, psi) chosen so that the first source point with a
/// nonzero value lies in class 0 (hence point 0 is always in class 0). When
/// the top constrained singular value is repeated (several disjoint coherent
/// blocks), the centred index ramp is projected onto the repeated subspace to
/// pick a deterministic representative, which is cut so that each side gets
/// half of its distinct values (blocks) instead of at zero; the result is
/// flagged `ambiguous`.
inline SpectralPartition spectral_cluster(const TransferOperator& op,
                                          const SpectralOptions& opts = {}) {
  const Index n = op.source_size(), m = op.target_size();
  detail::require(n >= 1 && m >= 1, "spectral_cluster: empty operator");
  const Vector& mu = op.sourceWeights;
  const Vector& nu = op.targetWeights;
  const Vector imu = detail::inv_sqrt_or_zero(mu), inu = detail::inv_sqrt_or_zero(nu);
  const Matrix M = imu.asDiagonal() * op.coupling * inu.asDiagonal();
  const Vector smu = mu.cwiseSqrt().normalized();
  const Vector snu = nu.cwiseSqrt().normalized();

  // P M Q with P = I - smu smu^T and Q = I - snu snu^T.
  Matrix N = M;
  N -= smu * (smu.transpose() * N);
  N -= (N * snu) * snu.transpose();

  const bool dense = std::max(n, m) < opts.denseLimit;
  SingularTriples lead = dense ? dense_svd(M) : truncated_svd(M, 1);
  SingularTriples top = dense ? dense_svd(N) : truncated_svd(N, 4);

  SpectralPartition out;
  out.sigma1 = lead.values[0];
  out.leadingResidual =
      std::max((M * snu - out.sigma1 * smu).norm(), (M.transpose() * smu - out.sigma1 * snu).norm());

  out.sigma = top.values.size() > 0 ? top.values[0] : 0.0;
  const double scale = std::max(1.0, out.sigma);
  Index mult = 1;
  while (mult < top.values.size() &&
         out.sigma - top.values[mult] <= opts.degeneracyTolerance * scale)
    ++mult;

  Vector a = top.left.col(0);
  if (mult > 1 && out.sigma > 0.0) {
    out.ambiguous = true;
    Vector ramp(n);
    for (Index i = 0; i < n; ++i) ramp[i] = static_cast<double>(i);
    ramp.array() -= ramp.dot(mu) / mu.sum();
    const Vector probe = mu.cwiseSqrt().cwiseProduct(ramp);
    const Matrix U = top.left.leftCols(mult);
    Vector proj = U * (U.transpose() * probe);
    if (proj.norm() > 1e-12 * probe.norm()) a = proj.normalized();
    out.warnings.push_back("repeated constrained singular value (multiplicity " +
                           std::to_string(mult) + "); partition picked by index-ramp projection and a block-balanced cut");
  }
  Vector b = out.sigma > 0.0 ? Vector(N.transpose() * a / out.sigma) : Vector(top.right.col(0));

  out.phi = imu.cwiseProduct(a);
  out.psi = inu.cwiseProduct(b);
  if (out.ambiguous) out.threshold = detail::balanced_cut(out.phi, mu);
  for (Index i = 0; i < n; ++i) {
    if (out.phi[i] != out.threshold) {
      if (out.phi[i] < out.threshold) {
        out.phi = -out.phi;
        out.psi = -out.psi;
        out.threshold = -out.threshold;
      }
      break;
    }
  }
  out.sourcePartition.resize(static_cast<std::size_t>(n));
  out.targetPartition.resize(static_cast<std::size_t>(m));
  for (Index i = 0; i < n; ++i) out.sourcePartition[i] = out.phi[i] >= out.threshold ? 0 : 1;
  for (Index j = 0; j < m; ++j) out.targetPartition[j] = out.psi[j] >= out.threshold ? 0 : 1;

  if (out.sigma >= out.sigma1 - opts.degeneracyTolerance * std::max(1.0, out.sigma1)) {
    out.degenerate = true;
    out.warnings.push_back("second singular value equals the first (disconnected transfer)");
  }
  coherence_report(op, out);
  return out;
}

/// Shape score per class: GW distortion of the plan restricted
/// to X_k x Y_k.
inline std::array<double, 2> shape_scores(const SpectralPartition& part, const Matrix& plan,
                                          const Matrix& dX, const Matrix& dY) {
  return {gw_distortion_restricted(plan, dX, dY, part.source_class(0), part.target_class(0)),
          gw_distortion_restricted(plan, dX, dY, part.source_class(1), part.target_class(1))};
}

// ---------------------------------------------------------------------------
// Nested bipartitioning

struct ClusterNode {
  std::vector<Index> sourceIndices;  ///< into the original source
  std::vector<Index> targetIndices;
  int level = 0;
  int parent = -1;
  std::vector<int> children;
  std::optional<SpectralPartition> split;
  double shapeScore = 0.0;  ///< restricted GW distortion of the original plan
  std::string stopReason;   ///< empty unless recursion stopped early

  bool leaf() const { return children.empty(); }
};

struct ClusterHierarchy {
  std::vector<ClusterNode> nodes;  ///< nodes[0] is the root

  std::vector<int> leaves() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].leaf()) out.push_back(static_cast<int>(i));
    return out;
  }
  /// Leaf id per source point and per target point.
  std::pair<std::vector<int>, std::vector<int>> leaf_labels(Index n, Index m) const {
    std::vector<int> s(static_cast<std::size_t>(n), -1), t(static_cast<std::size_t>(m), -1);
    const auto lv = leaves();
    for (std::size_t k = 0; k < lv.size(); ++k) {
      for (Index i : nodes[lv[k]].sourceIndices) s[i] = static_cast<int>(k);
      for (Index j : nodes[lv[k]].targetIndices) t[j] = static_cast<int>(k);
    }
    return {s, t};
  }
};

struct NestedOptions {
  MarginalSource marginals = MarginalSource::Coupling;
  SpectralOptions spectral;
};

/// Recursive spectral bipartitioning, `depth` levels deep (2^depth leaves
/// when no branch stops early). Each child is clustered with the restricted
/// coupling and renormalized sub-measures; classes with fewer than two
/// points on either side end their branch.
inline ClusterHierarchy nested_cluster(const MetricMeasureSpace& source,
                                       const MetricMeasureSpace& target, const TransportPlan& plan,
                                       int depth, const NestedOptions& opts = {}) {
  detail::require(depth >= 1, "nested_cluster: depth must be >= 1");
  detail::require(plan.rows() == source.size() && plan.cols() == target.size(),
                  "nested_cluster: plan shape does not match the spaces");
  const Matrix& pi = plan.coupling;
  const Vector in_mu = plan.sourceWeights.size() == pi.rows() ? plan.sourceWeights : source.weights();
  const Vector in_nu = plan.targetWeights.size() == pi.cols() ? plan.targetWeights : target.weights();

  ClusterHierarchy h;
  ClusterNode root;
  for (Index i = 0; i < pi.rows(); ++i) root.sourceIndices.push_back(i);
  for (Index j = 0; j < pi.cols(); ++j) root.targetIndices.push_back(j);
  h.nodes.push_back(std::move(root));

  // Breadth-first so node ids are ordered by level, then by class.
  for (std::size_t cur = 0; cur < h.nodes.size(); ++cur) {
    ClusterNode node = h.nodes[cur];
    node.shapeScore = gw_distortion_restricted(pi, source.distances(), target.distances(),
                                               node.sourceIndices, node.targetIndices);
    if (node.level >= depth) {
      h.nodes[cur] = std::move(node);
      continue;
    }
    if (node.sourceIndices.size() < 2 || node.targetIndices.size() < 2) {
      node.stopReason = "fewer than two points in class";
      h.nodes[cur] = std::move(node);
      continue;
    }
    Matrix sub = submatrix(pi, node.sourceIndices, node.targetIndices);
    if (!(sub.sum() > 0.0)) {
      node.stopReason = "no coupled mass between the classes";
      h.nodes[cur] = std::move(node);
      continue;
    }
    TransferOperator op;
    if (opts.marginals == MarginalSource::Input) {
      Vector a = subvector(in_mu, node.sourceIndices), b = subvector(in_nu, node.targetIndices);
      const double ma = a.sum(), mb = b.sum();
      op = build_transfer(sub / (ma * mb), a / ma, b / mb);
    } else {
      sub /= sub.sum();
      auto [p, q] = marginals(sub);
      op = build_transfer(sub, p, q);
    }
    SpectralPartition part = spectral_cluster(op, opts.spectral);
    part.shapeScores = shape_scores(part, sub, submatrix(source.distances(), node.sourceIndices, node.sourceIndices),
                                    submatrix(target.distances(), node.targetIndices, node.targetIndices));
    std::array<ClusterNode, 2> kids;
    for (int k = 0; k < 2; ++k) {
      for (Index a : part.source_class(k)) kids[k].sourceIndices.push_back(node.sourceIndices[a]);
      for (Index b : part.target_class(k)) kids[k].targetIndices.push_back(node.targetIndices[b]);
      kids[k].level = node.level + 1;
      kids[k].parent = static_cast<int>(cur);
    }
    if (kids[1].sourceIndices.empty() && kids[1].targetIndices.empty()) {
      node.stopReason = "trivial bipartition";
      node.split = std::move(part);
      h.nodes[cur] = std::move(node);
      continue;
    }
    node.split = std::move(part);
    for (int k = 0; k < 2; ++k) {
      node.children.push_back(static_cast<int>(h.nodes.size()));
      h.nodes.push_back(std::move(kids[k]));
    }
    h.nodes[cur] = std::move(node);
  }
  return h;
}

}  // namespace gwt

#endif  // GWT_TRANSFER_HPP_
