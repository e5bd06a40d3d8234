#ifndef GWT_MEASURES_HPP_
#define GWT_MEASURES_HPP_

// Discrete measures, metric measure spaces and transport plans.
//
// Everything in this header is a value type that validates its invariants
// on construction and is immutable afterwards. Weights are kept
// unnormalized; solvers that need probability measures normalize on entry.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gwt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Thrown for violated preconditions (shape mismatch, negative mass, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

inline std::string shape(Index r, Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Kullback-Leibler divergence

/// Generalized KL divergence between nonnegative vectors,
///   KL(a, b) = sum a_i log(a_i / b_i) + sum b_i - sum a_i,
/// with 0 log(0 / b) = 0. Returns +inf when some a_i > 0 meets b_i = 0.
inline double kl_divergence(const Vector& a, const Vector& b) {
  detail::require(a.size() == b.size(),
                  "kl_divergence: length mismatch (" + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()) + ")");
  double acc = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double ai = a[i], bi = b[i];
    detail::require(ai >= 0.0 && bi >= 0.0, "kl_divergence: negative entry");
    if (ai > 0.0) {
      if (bi == 0.0) return kInfinity;
      acc += ai * std::log(ai / bi);
    }
    acc += bi - ai;
  }
  return acc;
}

/// Matrix overload; entries are compared elementwise.
inline double kl_divergence(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "kl_divergence: shape mismatch");
  return kl_divergence(Vector(a.reshaped()), Vector(b.reshaped()));
}

/// KL(a (x) a, b (x) b) of the tensor squares, evaluated without forming
/// them: 2 m(a) KL(a, b) + (m(a) - m(b))^2.
inline double quadratic_kl(const Vector& a, const Vector& b) {
  const double kl = kl_divergence(a, b);
  if (!std::isfinite(kl)) return kInfinity;
  const double ma = a.sum(), mb = b.sum();
  return 2.0 * ma * kl + (ma - mb) * (ma - mb);
}

inline double quadratic_kl(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "quadratic_kl: shape mismatch");
  return quadratic_kl(Vector(a.reshaped()), Vector(b.reshaped()));
}

// ---------------------------------------------------------------------------
// Discrete measures

/// Weighted point set sum_i w_i delta_{x_i}; points are stored row-wise.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  DiscreteMeasure(Matrix points, Vector weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    detail::require(points_.rows() == weights_.size(),
                    "DiscreteMeasure: " + std::to_string(points_.rows()) +
                        " points but " + std::to_string(weights_.size()) +
                        " weights");
    detail::require(weights_.size() > 0, "DiscreteMeasure: empty measure");
    for (Index i = 0; i < weights_.size(); ++i) {
      detail::require(std::isfinite(weights_[i]) && weights_[i] >= 0.0,
                      "DiscreteMeasure: weight " + std::to_string(i) +
                          " is negative or not finite");
    }
    detail::require(weights_.maxCoeff() > 0.0,
                    "DiscreteMeasure: all weights are zero");
    detail::require(points_.allFinite(), "DiscreteMeasure: non-finite coordinate");
  }

  /// Uniform probability measure on the given points.
  static DiscreteMeasure uniform(Matrix points) {
    const Index n = points.rows();
    detail::require(n > 0, "DiscreteMeasure::uniform: no points");
    return {std::move(points), Vector::Constant(n, 1.0 / static_cast<double>(n))};
  }

  const Matrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  Index size() const { return weights_.size(); }
  Index dimension() const { return points_.cols(); }
  double mass() const { return weights_.sum(); }

  bool is_probability(double tol = 1e-12) const {
    return std::abs(mass() - 1.0) <= tol;
  }

  DiscreteMeasure normalized() const { return {points_, weights_ / mass()}; }

 private:
  Matrix points_;
  Vector weights_;
};

/// Euclidean distance matrix of row-wise points.
inline Matrix pairwise_distance_matrix(const Matrix& points) {
  detail::require(points.rows() > 0, "pairwise_distance_matrix: no points");
  const Index n = points.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = i + 1; k < n; ++k) {
      const double v = (points.row(i) - points.row(k)).norm();
      d(i, k) = v;
      d(k, i) = v;
    }
  }
  return d;
}

/// Point-list overload; every point must have the same dimension.
inline Matrix pairwise_distance_matrix(const std::vector<std::vector<double>>& points) {
  detail::require(!points.empty(), "pairwise_distance_matrix: no points");
  const auto dim = points.front().size();
  Matrix m(static_cast<Index>(points.size()), static_cast<Index>(dim));
  for (std::size_t i = 0; i < points.size(); ++i) {
    detail::require(points[i].size() == dim,
                    "pairwise_distance_matrix: point " + std::to_string(i) +
                        " has dimension " + std::to_string(points[i].size()) +
                        ", expected " + std::to_string(dim));
    for (std::size_t c = 0; c < dim; ++c)
      m(static_cast<Index>(i), static_cast<Index>(c)) = points[i][c];
  }
  return pairwise_distance_matrix(m);
}

/// Euclidean distances between the rows of two point sets.
inline Matrix cross_distance_matrix(const Matrix& a, const Matrix& b) {
  detail::require(a.cols() == b.cols(), "cross_distance_matrix: dimension mismatch");
  Matrix d(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).norm();
  return d;
}

/// Squared Euclidean cost between two point sets.
inline Matrix squared_euclidean_cost(const Matrix& a, const Matrix& b) {
  return cross_distance_matrix(a, b).array().square().matrix();
}

/// (X, d_X, mu): a measure together with its cached pairwise distances.
class MetricMeasureSpace {
 public:
  MetricMeasureSpace() = default;

  /// Euclidean metric computed from the measure's coordinates.
  explicit MetricMeasureSpace(DiscreteMeasure measure)
      : measure_(std::move(measure)),
        distances_(pairwise_distance_matrix(measure_.points())) {}

  /// Arbitrary symmetric, nonnegative, zero-diagonal matrix. No metric-axiom
  /// check is made beyond that.
  MetricMeasureSpace(DiscreteMeasure measure, Matrix distances)
      : measure_(std::move(measure)), distances_(std::move(distances)) {
    const Index n = measure_.size();
    detail::require(distances_.rows() == n && distances_.cols() == n,
                    "MetricMeasureSpace: distance matrix is " +
                        detail::shape(distances_.rows(), distances_.cols()) +
                        ", expected " + detail::shape(n, n));
    for (Index i = 0; i < n; ++i) {
      detail::require(distances_(i, i) == 0.0, "MetricMeasureSpace: nonzero diagonal");
      for (Index k = 0; k < n; ++k) {
        detail::require(std::isfinite(distances_(i, k)) && distances_(i, k) >= 0.0,
                        "MetricMeasureSpace: negative or non-finite distance");
        detail::require(distances_(i, k) == distances_(k, i),
                        "MetricMeasureSpace: distance matrix not symmetric");
      }
    }
  }

  const DiscreteMeasure& measure() const { return measure_; }
  const Matrix& distances() const { return distances_; }
  const Vector& weights() const { return measure_.weights(); }
  Index size() const { return measure_.size(); }

  /// Same space with distances divided by `scale`.
  MetricMeasureSpace rescaled(double scale) const {
    detail::require(scale > 0.0, "MetricMeasureSpace::rescaled: scale must be positive");
    MetricMeasureSpace out;
    out.measure_ = measure_;
    out.distances_ = distances_ / scale;
    return out;
  }

  /// Same space with weights divided by their total.
  MetricMeasureSpace normalized() const {
    MetricMeasureSpace out;
    out.measure_ = measure_.normalized();
    out.distances_ = distances_;
    return out;
  }

 private:
  DiscreteMeasure measure_;
  Matrix distances_;
};

/// Metric measure space with one label vector per point (rows of `labels`).
class LabelledSpace {
 public:
  LabelledSpace() = default;
  LabelledSpace(MetricMeasureSpace space, Matrix labels)
      : space_(std::move(space)), labels_(std::move(labels)) {
    detail::require(labels_.rows() == space_.size(),
                    "LabelledSpace: " + std::to_string(labels_.rows()) +
                        " labels for " + std::to_string(space_.size()) + " points");
    detail::require(labels_.allFinite(), "LabelledSpace: non-finite label");
  }

  const MetricMeasureSpace& space() const { return space_; }
  const Matrix& labels() const { return labels_; }
  Index size() const { return space_.size(); }
  Index label_dimension() const { return labels_.cols(); }

 private:
  MetricMeasureSpace space_;
  Matrix labels_;
};

// ---------------------------------------------------------------------------
// Transport plans

/// Coupling matrix plus the marginals and solver settings that produced it.
struct TransportPlan {
  Matrix coupling;
  Vector sourceWeights;
  Vector targetWeights;
  double epsilon = 0.0;
  std::optional<double> kappa;
  int iterations = 0;
  double convergedResidual = 0.0;
  bool converged = true;

  Index rows() const { return coupling.rows(); }
  Index cols() const { return coupling.cols(); }
  double mass() const { return coupling.sum(); }
  bool balanced() const { return !kappa.has_value(); }
};

/// Row and column sums of a coupling.
inline std::pair<Vector, Vector> marginals(const Matrix& coupling) {
  return {coupling.rowwise().sum(), coupling.colwise().sum().transpose()};
}

inline std::pair<Vector, Vector> marginals(const TransportPlan& plan) {
  return marginals(plan.coupling);
}

/// max(|row sums - mu|_inf, |col sums - nu|_inf).
inline double marginal_residual(const Matrix& coupling, const Vector& mu, const Vector& nu) {
  auto [r, c] = marginals(coupling);
  return std::max((r - mu).cwiseAbs().maxCoeff(), (c - nu).cwiseAbs().maxCoeff());
}

/// Product coupling mu (x) nu.
inline Matrix product_coupling(const Vector& mu, const Vector& nu) {
  return mu * nu.transpose();
}

/// Entries selected by index lists, in list order.
inline Matrix submatrix(const Matrix& m, const std::vector<Index>& rows,
                        const std::vector<Index>& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return out;
}

inline Vector subvector(const Vector& v, const std::vector<Index>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = v[idx[i]];
  return out;
}

inline Matrix subrows(const Matrix& m, const std::vector<Index>& idx) {
  Matrix out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(idx[i]);
  return out;
}

}  // namespace gwt

#endif  // GWT_MEASURES_HPP_
