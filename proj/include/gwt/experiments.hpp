#ifndef GWT_EXPERIMENTS_HPP_
#define GWT_EXPERIMENTS_HPP_

// Synthetic flows and the experiment drivers built on them.
//
// Rotations are counter-clockwise: (x, y) -> (x cos t - y sin t, x sin t + y cos t).
// The two-disk flow rotates each half-disk about its own centre first and
// then applies the global rotation; the other order would move points out
// of the disks on which the local rotations are defined.

#include "gwt/gw.hpp"
#include "gwt/measures.hpp"
#include "gwt/sinkhorn.hpp"
#include "gwt/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

namespace gwt {

// ---------------------------------------------------------------------------
// Generators and flows

/// n points uniform on the closed unit disk (radius = sqrt(u)).
inline Matrix sample_unit_disk(Index n, std::uint64_t seed) {
  detail::require(n >= 1, "sample_unit_disk: n must be >= 1");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix pts(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double r = std::sqrt(unif(gen));
    const double t = 2.0 * std::numbers::pi * unif(gen);
    pts(i, 0) = r * std::cos(t);
    pts(i, 1) = r * std::sin(t);
  }
  return pts;
}

inline Matrix rotation_matrix(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

/// Counter-clockwise rotation about the origin.
inline Matrix rotate(const Matrix& points, double theta) {
  detail::require(points.cols() == 2, "rotate: points must be 2D");
  return points * rotation_matrix(theta).transpose();
}

/// Counter-clockwise rotation about `center`.
inline Matrix rotate_about(const Matrix& points, double theta, const Eigen::RowVector2d& center) {
  Matrix shifted = points.rowwise() - center;
  Matrix out = rotate(shifted, theta);
  out.rowwise() += center;
  return out;
}

inline const Eigen::RowVector2d kDiskCenter1{-0.5, 0.0};
inline const Eigen::RowVector2d kDiskCenter2{0.5, 0.0};
inline constexpr double kDiskRadius = 0.5;

/// 1 or 2 for the half-disk containing p (the shared point 0 goes to disk 1),
/// 0 if p lies in neither.
inline int disk_of(const Eigen::RowVector2d& p) {
  constexpr double slack = 1e-12;
  const double d1 = (p - kDiskCenter1).norm(), d2 = (p - kDiskCenter2).norm();
  if (d1 <= kDiskRadius + slack && d1 <= d2) return 1;
  if (d2 <= kDiskRadius + slack) return 2;
  return 0;
}

/// Local rotation by `localAngle` about the centre of each half-disk, then
/// the global rotation by `theta`. Throws for points outside both disks.
inline Matrix two_disk_flow(const Matrix& points, double theta,
                            double localAngle = -std::numbers::pi / 4.0) {
  detail::require(points.cols() == 2, "two_disk_flow: points must be 2D");
  Matrix out(points.rows(), 2);
  for (Index i = 0; i < points.rows(); ++i) {
    const Eigen::RowVector2d p = points.row(i);
    const int d = disk_of(p);
    if (d == 0)
      throw InvalidArgument("two_disk_flow: point " + std::to_string(i) + " lies outside both disks");
    const auto& c = d == 1 ? kDiskCenter1 : kDiskCenter2;
    out.row(i) = rotate_about(points.row(i), localAngle, c);
  }
  return rotate(out, theta);
}

/// n/2 points uniform in each half-disk: rows [0, n/2) in disk 1.
inline Matrix sample_two_disks(Index n, std::uint64_t seed) {
  detail::require(n >= 2 && n % 2 == 0, "sample_two_disks: n must be even and >= 2");
  const Matrix unit = sample_unit_disk(n, seed);
  Matrix pts(n, 2);
  for (Index i = 0; i < n; ++i) {
    const auto& c = i < n / 2 ? kDiskCenter1 : kDiskCenter2;
    pts.row(i) = c + kDiskRadius * unit.row(i);
  }
  return pts;
}

/// Adds m * eta with eta ~ U([-0.1, 0.1]^2), i.i.d. per point; the draw of
/// eta depends only on the seed, so different m scale the same eta.
inline Matrix add_noise(const Matrix& points, double m, std::uint64_t seed) {
  detail::require(m >= 0.0, "add_noise: magnitude must be >= 0");
  if (m == 0.0) return points;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(-0.1, 0.1);
  Matrix out = points;
  for (Index i = 0; i < out.rows(); ++i)
    for (Index c = 0; c < out.cols(); ++c) out(i, c) += m * unif(gen);
  return out;
}

/// Mean displacement error of a transfer kernel against a known map:
///   e = 1 / (|X| |Y|) sum_{x, y} k(x, y) |T(x) - y|.
/// With uniform weights and |X| = |Y| = n this is the 1/n^2 normalization.
inline double transfer_error(const Matrix& kernel, const Matrix& mappedX, const Matrix& Y) {
  detail::require(kernel.rows() == mappedX.rows() && kernel.cols() == Y.rows(),
                  "transfer_error: kernel is " + detail::shape(kernel.rows(), kernel.cols()) +
                      " for " + std::to_string(mappedX.rows()) + " and " +
                      std::to_string(Y.rows()) + " points");
  const Matrix d = cross_distance_matrix(mappedX, Y);
  return kernel.cwiseProduct(d).sum() /
         (static_cast<double>(kernel.rows()) * static_cast<double>(kernel.cols()));
}

template <class Map>
double transfer_error(const Matrix& kernel, const Matrix& X, const Matrix& Y, Map&& trueMap) {
  return transfer_error(kernel, Matrix(trueMap(X)), Y);
}

/// Rand index of two labelings of the same points.
inline double rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  detail::require(a.size() == b.size(), "rand_index: size mismatch");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::size_t agree = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k) {
      agree += ((a[i] == a[k]) == (b[i] == b[k])) ? 1 : 0;
      ++total;
    }
  return static_cast<double>(agree) / static_cast<double>(total);
}

namespace detail {

// Runs f(0..count-1) on up to hardware_concurrency threads. Each index is
// handled by exactly one thread; results go to caller-owned slots.
template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) f(i);
    });
  for (auto& th : pool) th.join();
}

inline Vector uniform_weights(Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Rotating disk

struct RotatingDiskScenario {
  Index n = 50;
  double theta = std::numbers::pi / 2.0;
  double noiseMagnitude = 0.0;
  std::uint64_t seed = 0;
  double epsilon = 0.0008;
  double tolerance = 1e-9;
  int maxIterations = 100000;
};

struct RotatingDiskCell {
  RotatingDiskScenario scenario;
  double errorOt = 0.0;
  double errorGw = 0.0;
  double distortionGw = 0.0;
  bool otConverged = true;
  bool gwConverged = true;
};

/// Seed of the noise draw for a given sample seed.
inline std::uint64_t noise_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

/// One (theta, m, seed) cell: X uniform on the disk, Y = R_theta(X) + m eta,
/// OT with squared Euclidean cost and GW, both at the scenario's epsilon.
inline RotatingDiskCell run_rotating_disk_cell(const RotatingDiskScenario& sc) {
  detail::require(sc.n >= 2, "RotatingDiskScenario: n must be >= 2");
  detail::require(sc.theta >= 0.0 && sc.theta < 2.0 * std::numbers::pi,
                  "RotatingDiskScenario: theta must lie in [0, 2 pi)");
  const Matrix X = sample_unit_disk(sc.n, sc.seed);
  const Matrix RX = rotate(X, sc.theta);
  const Matrix Y = add_noise(RX, sc.noiseMagnitude, noise_seed(sc.seed));
  const Vector w = detail::uniform_weights(sc.n);

  SolverConfig cfg;
  cfg.epsilon = sc.epsilon;
  cfg.tolerance = sc.tolerance;
  cfg.maxIterations = sc.maxIterations;

  RotatingDiskCell cell;
  cell.scenario = sc;
  const auto ot = solve_entropic_ot(w, w, squared_euclidean_cost(X, Y), cfg);
  cell.otConverged = ot.plan.converged;
  cell.errorOt = transfer_error(build_transfer(ot.plan, MarginalSource::Input).kernel, RX, Y);

  GwProblem pb;
  pb.source = MetricMeasureSpace(DiscreteMeasure(X, w));
  pb.target = MetricMeasureSpace(DiscreteMeasure(Y, w));
  pb.epsilon = sc.epsilon;
  pb.inner = cfg;
  const auto gw = solve_entropic_gw(pb);
  cell.gwConverged = gw.plan.converged;
  cell.distortionGw = gw_distortion(gw.plan.coupling, pb.source.distances(), pb.target.distances());
  cell.errorGw = transfer_error(build_transfer(gw.plan, MarginalSource::Input).kernel, RX, Y);
  return cell;
}

struct RotatingDiskConfig {
  Index n = 50;
  double epsilon = 0.0008;
  std::vector<double> angles;  ///< empty: k pi / 30, k = 1..30
  int repetitions = 10;
  std::uint64_t baseSeed = 0;  ///< repetition r uses seed baseSeed + r
  double noisyMagnitude = 1.0;
  double sweepAngle = std::numbers::pi / 2.0;
  std::vector<double> sweepMagnitudes;  ///< empty: 0.5, 1.0, ..., 4.5
  double tolerance = 1e-9;
  int maxIterations = 100000;
  unsigned threads = 0;  ///< 0: hardware concurrency

  std::vector<double> resolved_angles() const {
    if (!angles.empty()) return angles;
    std::vector<double> a;
    for (int k = 1; k <= 30; ++k) a.push_back(k * std::numbers::pi / 30.0);
    // pi itself is outside [0, 2 pi) only if rounding pushes it; it does not.
    return a;
  }
  std::vector<double> resolved_magnitudes() const {
    if (!sweepMagnitudes.empty()) return sweepMagnitudes;
    std::vector<double> m;
    for (int k = 1; k <= 9; ++k) m.push_back(0.5 * k);
    return m;
  }
  RotatingDiskScenario scenario(double theta, double noise, int rep) const {
    RotatingDiskScenario s;
    s.n = n;
    s.theta = theta;
    s.noiseMagnitude = noise;
    s.seed = baseSeed + static_cast<std::uint64_t>(rep);
    s.epsilon = epsilon;
    s.tolerance = tolerance;
    s.maxIterations = maxIterations;
    return s;
  }
};

struct RotatingDiskRow {
  double theta = 0.0;
  double meanErrorOt = 0.0;
  double meanErrorGw = 0.0;
  double meanErrorOtNoisy = 0.0;
  double meanErrorGwNoisy = 0.0;
  int unconverged = 0;
};

struct NoiseSweepRow {
  double magnitude = 0.0;
  double meanErrorOt = 0.0;
  double meanErrorGw = 0.0;
  int unconverged = 0;
};

struct RotatingDiskReport {
  RotatingDiskConfig config;
  std::vector<RotatingDiskRow> rows;
  std::vector<NoiseSweepRow> sweep;
  std::vector<RotatingDiskCell> cells;  ///< every solved cell, grid order
};

/// Mean errors over repetitions for every angle (noiseless and noisy) and
/// the noise sweep at a fixed angle. Cells run concurrently; means are
/// summed in repetition order, so results do not depend on the thread count.
inline RotatingDiskReport run_rotating_disk(const RotatingDiskConfig& cfg) {
  detail::require(cfg.repetitions >= 1, "run_rotating_disk: repetitions must be >= 1");
  const auto angles = cfg.resolved_angles();
  const auto mags = cfg.resolved_magnitudes();
  detail::require(!angles.empty(), "run_rotating_disk: no angles");

  std::vector<RotatingDiskScenario> grid;
  for (double th : angles)
    for (double noise : {0.0, cfg.noisyMagnitude})
      for (int r = 0; r < cfg.repetitions; ++r) grid.push_back(cfg.scenario(th, noise, r));
  for (double m : mags)
    for (int r = 0; r < cfg.repetitions; ++r) grid.push_back(cfg.scenario(cfg.sweepAngle, m, r));

  RotatingDiskReport rep;
  rep.config = cfg;
  rep.cells.resize(grid.size());
  detail::parallel_for(grid.size(), cfg.threads,
                       [&](std::size_t i) { rep.cells[i] = run_rotating_disk_cell(grid[i]); });

  const double reps = static_cast<double>(cfg.repetitions);
  std::size_t at = 0;
  for (double th : angles) {
    RotatingDiskRow row;
    row.theta = th;
    for (int pass = 0; pass < 2; ++pass) {
      double eo = 0.0, eg = 0.0;
      for (int r = 0; r < cfg.repetitions; ++r, ++at) {
        eo += rep.cells[at].errorOt;
        eg += rep.cells[at].errorGw;
        row.unconverged += !rep.cells[at].otConverged + !rep.cells[at].gwConverged;
      }
      (pass == 0 ? row.meanErrorOt : row.meanErrorOtNoisy) = eo / reps;
      (pass == 0 ? row.meanErrorGw : row.meanErrorGwNoisy) = eg / reps;
    }
    rep.rows.push_back(row);
  }
  for (double m : mags) {
    NoiseSweepRow row;
    row.magnitude = m;
    double eo = 0.0, eg = 0.0;
    for (int r = 0; r < cfg.repetitions; ++r, ++at) {
      eo += rep.cells[at].errorOt;
      eg += rep.cells[at].errorGw;
      row.unconverged += !rep.cells[at].otConverged + !rep.cells[at].gwConverged;
    }
    row.meanErrorOt = eo / reps;
    row.meanErrorGw = eg / reps;
    rep.sweep.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Two rotating disks

struct TwoDiskScenario {
  Index n = 80;
  double theta = std::numbers::pi / 2.0;
  double localAngle = -std::numbers::pi / 4.0;
  std::uint64_t seed = 0;
  double epsilon = 0.001;
  double tolerance = 1e-9;
  int maxIterations = 100000;
};

struct ClusteringDiagnostics {
  TransportPlan plan;
  TransferOperator op;
  SpectralPartition partition;
  double randIndexSource = 0.0;
  double randIndexTarget = 0.0;
  double errorToTruth = 0.0;  ///< transfer_error against F
};

struct TwoDiskReport {
  TwoDiskScenario scenario;
  Matrix X, Y;
  std::vector<int> truth;  ///< 0 for disk 1, 1 for disk 2 (same index on X and Y)
  ClusteringDiagnostics ot;
  ClusteringDiagnostics gw;

  bool gw_success(double threshold = 0.9) const {
    return gw.randIndexSource >= threshold && gw.randIndexTarget >= threshold;
  }
};

inline TwoDiskReport run_two_disks(const TwoDiskScenario& sc) {
  detail::require(sc.n >= 2 && sc.n % 2 == 0, "TwoDiskScenario: n must be even");
  TwoDiskReport rep;
  rep.scenario = sc;
  rep.X = sample_two_disks(sc.n, sc.seed);
  rep.Y = two_disk_flow(rep.X, sc.theta, sc.localAngle);
  rep.truth.resize(static_cast<std::size_t>(sc.n));
  for (Index i = 0; i < sc.n; ++i) rep.truth[i] = i < sc.n / 2 ? 0 : 1;
  const Vector w = detail::uniform_weights(sc.n);

  SolverConfig cfg;
  cfg.epsilon = sc.epsilon;
  cfg.tolerance = sc.tolerance;
  cfg.maxIterations = sc.maxIterations;

  const MetricMeasureSpace sx(DiscreteMeasure(rep.X, w));
  const MetricMeasureSpace sy(DiscreteMeasure(rep.Y, w));
  auto finish = [&](ClusteringDiagnostics& d) {
    d.op = build_transfer(d.plan, MarginalSource::Coupling);
    d.partition = spectral_cluster(d.op);
    d.partition.shapeScores = shape_scores(d.partition, d.plan.coupling, sx.distances(), sy.distances());
    d.randIndexSource = rand_index(d.partition.sourcePartition, rep.truth);
    d.randIndexTarget = rand_index(d.partition.targetPartition, rep.truth);
    d.errorToTruth = transfer_error(d.op.kernel, rep.Y, rep.Y);
  };

  rep.ot.plan = solve_entropic_ot(w, w, squared_euclidean_cost(rep.X, rep.Y), cfg).plan;
  finish(rep.ot);

  GwProblem pb;
  pb.source = sx;
  pb.target = sy;
  pb.epsilon = sc.epsilon;
  pb.inner = cfg;
  rep.gw.plan = solve_entropic_gw(pb).plan;
  finish(rep.gw);
  return rep;
}

// ---------------------------------------------------------------------------
// Labelled pipeline (fused unbalanced GW on user data)

struct PipelineConfig {
  double epsilon = 0.0003;
  double kappa = 0.1;
  double labelWeight = 1.0;
  int depth = 3;
  bool normalizeMetrics = true;  ///< divide all distances by the source's diameter
  double tolerance = 1e-9;
  int maxIterations = 100000;
  int maxOuterIterations = 200;
  MarginalSource marginals = MarginalSource::Coupling;
};

struct PipelineReport {
  PipelineConfig config;
  double distanceScale = 1.0;
  GwResult fgw;
  SinkhornResult ot;  ///< unbalanced OT with cost |x - y|^2 + |l_x - l_y|^2
  ClusterHierarchy hierarchy;
  double crossLabelMassGw = 0.0;  ///< plan mass between points with different labels
  double crossLabelMassOt = 0.0;

  std::vector<double> leaf_shape_scores() const {
    std::vector<double> out;
    for (int id : hierarchy.leaves()) out.push_back(hierarchy.nodes[id].shapeScore);
    return out;
  }
};

/// Fused unbalanced GW between two labelled point clouds, the unbalanced OT
/// baseline, and nested spectral clustering of the GW plan.
inline PipelineReport run_labelled_pipeline(const LabelledSpace& source, const LabelledSpace& target,
                                            const PipelineConfig& cfg) {
  detail::require(source.label_dimension() == target.label_dimension(),
                  "run_labelled_pipeline: label dimensions differ");
  detail::require(source.label_dimension() >= 1, "run_labelled_pipeline: labels required");
  detail::require(cfg.depth >= 1, "run_labelled_pipeline: depth must be >= 1");
  if (source.label_dimension() == 1) {
    // Scalar labels are read as signs; a sign present on one side only has
    // nothing to be transported to.
    for (double sgn : {1.0, -1.0}) {
      const bool inSource = ((source.labels().col(0).array() * sgn) > 0.0).any();
      const bool inTarget = ((target.labels().col(0).array() * sgn) > 0.0).any();
      if (inSource != inTarget)
        throw InvalidArgument(std::string("run_labelled_pipeline: label class ") + (sgn > 0 ? "'+'" : "'-'") +
                              " is empty in the " + (inSource ? "target" : "source"));
    }
  }

  PipelineReport rep;
  rep.config = cfg;
  const double diam = source.space().distances().maxCoeff();
  rep.distanceScale = cfg.normalizeMetrics && diam > 0.0 ? diam : 1.0;

  // Probability measures proportional to the user weights.
  const MetricMeasureSpace sx = source.space().normalized().rescaled(rep.distanceScale);
  const MetricMeasureSpace sy = target.space().normalized().rescaled(rep.distanceScale);

  SolverConfig inner;
  inner.tolerance = cfg.tolerance;
  inner.maxIterations = cfg.maxIterations;

  GwProblem pb;
  pb.source = sx;
  pb.target = sy;
  pb.sourceLabels = source.labels();
  pb.targetLabels = target.labels();
  pb.epsilon = cfg.epsilon;
  pb.kappa = cfg.kappa;
  pb.labelWeight = cfg.labelWeight;
  pb.inner = inner;
  pb.maxOuterIterations = cfg.maxOuterIterations;
  rep.fgw = solve_entropic_fgw(pb);

  const Matrix xs = source.space().measure().points() / rep.distanceScale;
  const Matrix ys = target.space().measure().points() / rep.distanceScale;
  const Matrix label_d = label_distance(source.labels(), target.labels());
  const Matrix cost = squared_euclidean_cost(xs, ys) + label_d.array().square().matrix();
  SolverConfig ucfg = inner;
  ucfg.epsilon = cfg.epsilon;
  ucfg.kappa = cfg.kappa;
  rep.ot = solve_entropic_uot(sx.weights(), sy.weights(), cost, ucfg);

  for (Index i = 0; i < label_d.rows(); ++i)
    for (Index j = 0; j < label_d.cols(); ++j)
      if (label_d(i, j) > 0.0) {
        rep.crossLabelMassGw += rep.fgw.plan.coupling(i, j);
        rep.crossLabelMassOt += rep.ot.plan.coupling(i, j);
      }

  NestedOptions nopts;
  nopts.marginals = cfg.marginals;
  rep.hierarchy = nested_cluster(sx, sy, rep.fgw.plan, cfg.depth, nopts);
  return rep;
}

}  // namespace gwt

#endif  // GWT_EXPERIMENTS_HPP_
