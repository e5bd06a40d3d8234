#include "gwt/sinkhorn.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace gwt;

namespace {

// x log(x / y) - x + y, summed; the oracle's own KL.
double kl_entry(double x, double y) {
  if (x == 0.0) return y;
  return x * std::log(x / y) - x + y;
}

double oracle_ot_objective(const Matrix& p, const Matrix& c, const Vector& mu, const Vector& nu, double eps) {
  double v = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) v += c(i, j) * p(i, j) + eps * kl_entry(p(i, j), mu[i] * nu[j]);
  return v;
}

double oracle_uot_objective(const Matrix& p, const Matrix& c, const Vector& mu, const Vector& nu, double eps,
                            double kappa) {
  double v = oracle_ot_objective(p, c, mu, nu, eps);
  const Vector r = p.rowwise().sum(), s = p.colwise().sum().transpose();
  for (Index i = 0; i < r.size(); ++i) v += kappa * kl_entry(r[i], mu[i]);
  for (Index j = 0; j < s.size(); ++j) v += kappa * kl_entry(s[j], nu[j]);
  return v;
}

// Minimizer of a unimodal function on [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(c) < f(d))
      b = d;
    else
      a = c;
  }
  return 0.5 * (a + b);
}

SolverConfig config(double eps, std::optional<double> kappa = std::nullopt) {
  SolverConfig c;
  c.epsilon = eps;
  c.kappa = kappa;
  return c;
}

Matrix random_cost(Index n, Index m, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix c(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) c(i, j) = u(gen);
  return c;
}

Vector random_simplex(Index n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(gen);
  return v / v.sum();
}

}  // namespace

TEST(SolveEntropicOt, SingleAtoms) {
  const auto r = solve_entropic_ot(Vector::Ones(1), Vector::Ones(1), Matrix::Constant(1, 1, 3.7), config(0.1));
  EXPECT_NEAR(r.plan.coupling(0, 0), 1.0, 1e-15);
  EXPECT_TRUE(r.plan.converged);
}

TEST(SolveEntropicOt, TwoByTwoMatchesOneParameterBruteForce) {
  const Vector w = Vector::Constant(2, 0.5);
  Matrix c(2, 2);
  c << 0, 1, 1, 0;
  const double eps = 0.01;
  auto family = [](double t) {
    Matrix p(2, 2);
    p << t, 0.5 - t, 0.5 - t, t;
    return p;
  };
  const double t = golden_min([&](double s) { return oracle_ot_objective(family(s), c, w, w, eps); }, 0.0, 0.5);
  const auto r = solve_entropic_ot(w, w, c, config(eps));
  EXPECT_LE((r.plan.coupling - family(t)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(r.plan.coupling(0, 1), 1e-4);
  EXPECT_LT(r.plan.coupling(1, 0), 1e-4);
  EXPECT_NEAR(r.plan.coupling(0, 0), 0.5, 1e-4);
}

TEST(SolveEntropicOt, ZeroCostGivesProductCoupling) {
  const Vector w = Vector::Constant(2, 0.5);
  for (double eps : {1e-3, 0.1, 10.0}) {
    const auto r = solve_entropic_ot(w, w, Matrix::Zero(2, 2), config(eps));
    EXPECT_LE((r.plan.coupling - Matrix::Constant(2, 2, 0.25)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(SolveEntropicOt, RejectsUnnormalizedMarginalsAndKappa) {
  EXPECT_THROW(solve_entropic_ot(Vector::Ones(2), Vector::Constant(2, 0.5), Matrix::Zero(2, 2), config(0.1)),
               InvalidArgument);
  EXPECT_THROW(solve_entropic_ot(Vector::Ones(1), Vector::Ones(1), Matrix::Zero(1, 1), config(0.1, 1.0)),
               InvalidArgument);
}

TEST(SolveEntropicOt, RejectsBadInputs) {
  const Vector w = Vector::Constant(2, 0.5);
  EXPECT_THROW(solve_entropic_ot(w, w, Matrix::Zero(3, 2), config(0.1)), InvalidArgument);
  Matrix nanCost = Matrix::Zero(2, 2);
  nanCost(0, 1) = std::nan("");
  EXPECT_THROW(solve_entropic_ot(w, w, nanCost, config(0.1)), InvalidArgument);
  SolverConfig bad = config(0.1);
  bad.epsilon = 0.0;
  EXPECT_THROW(solve_entropic_ot(w, w, Matrix::Zero(2, 2), bad), InvalidArgument);
  bad = config(0.1);
  bad.maxIterations = 0;
  EXPECT_THROW(solve_entropic_ot(w, w, Matrix::Zero(2, 2), bad), InvalidArgument);
}

TEST(SolveEntropicOt, NonConvergenceIsFlaggedNotThrown) {
  std::mt19937_64 gen(2);
  const Vector mu = random_simplex(6, gen), nu = random_simplex(6, gen);
  SolverConfig cfg = config(1e-3);
  cfg.maxIterations = 1;
  cfg.epsilonScaling = false;
  cfg.newtonPolish = false;
  const auto r = solve_entropic_ot(mu, nu, random_cost(6, 6, gen), cfg);
  EXPECT_FALSE(r.plan.converged);
  EXPECT_GT(r.plan.convergedResidual, cfg.tolerance);
  EXPECT_EQ(r.plan.coupling.rows(), 6);
}

TEST(SolveEntropicOt, MarginalsWithinTolerance) {
  std::mt19937_64 gen(17);
  for (int t = 0; t < 20; ++t) {
    const Index n = 3 + t % 7, m = 2 + t % 5;
    const Vector mu = random_simplex(n, gen), nu = random_simplex(m, gen);
    const double eps = t % 2 ? 0.01 : 0.1;
    const auto r = solve_entropic_ot(mu, nu, random_cost(n, m, gen), config(eps));
    ASSERT_TRUE(r.plan.converged);
    EXPECT_LE(marginal_residual(r.plan.coupling, mu, nu), 1e-9);
    EXPECT_GT(r.plan.coupling.minCoeff(), 0.0);
  }
}

TEST(SolveEntropicOt, PositivePlansAndTinyEpsilonStability) {
  std::mt19937_64 gen(4);
  const Vector mu = random_simplex(8, gen), nu = random_simplex(8, gen);
  const Matrix c = random_cost(8, 8, gen);
  const auto r = solve_entropic_ot(mu, nu, c, config(0.01));
  EXPECT_GT(r.plan.coupling.minCoeff(), 0.0);
  const auto tiny = solve_entropic_ot(mu, nu, c, config(3e-4));
  EXPECT_TRUE(tiny.plan.converged);
  EXPECT_TRUE(tiny.plan.coupling.allFinite());
  EXPECT_GE(tiny.plan.coupling.minCoeff(), 0.0);
  EXPECT_LE(marginal_residual(tiny.plan.coupling, mu, nu), 1e-9);
}

TEST(SolveEntropicOt, SwappingMarginalsTransposesPlan) {
  std::mt19937_64 gen(23);
  const Vector mu = random_simplex(5, gen), nu = random_simplex(4, gen);
  const Matrix c = random_cost(5, 4, gen);
  const auto a = solve_entropic_ot(mu, nu, c, config(0.05));
  const auto b = solve_entropic_ot(nu, mu, c.transpose(), config(0.05));
  EXPECT_LE((a.plan.coupling - b.plan.coupling.transpose()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SolveEntropicOt, DualTraceIsNonDecreasing) {
  std::mt19937_64 gen(8);
  const Vector mu = random_simplex(10, gen), nu = random_simplex(10, gen);
  SolverConfig cfg = config(0.05);
  cfg.recordTrace = true;
  cfg.epsilonScaling = false;
  cfg.newtonPolish = false;
  const auto r = solve_entropic_ot(mu, nu, random_cost(10, 10, gen), cfg);
  ASSERT_GE(r.dualTrace.size(), 3u);
  for (std::size_t k = 1; k < r.dualTrace.size(); ++k)
    EXPECT_GE(r.dualTrace[k], r.dualTrace[k - 1] - 1e-12 * std::abs(r.dualTrace[k - 1]));
}

TEST(SolveEntropicOt, ScalingPathAgreesWithLogDomain) {
  std::mt19937_64 gen(31);
  const Vector mu = random_simplex(6, gen), nu = random_simplex(7, gen);
  const Matrix c = random_cost(6, 7, gen);
  SolverConfig fast = config(0.1);
  fast.logDomain = false;
  const auto a = solve_entropic_ot(mu, nu, c, config(0.1));
  const auto b = solve_entropic_ot(mu, nu, c, fast);
  EXPECT_LE((a.plan.coupling - b.plan.coupling).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SolveEntropicOt, ZeroWeightAtomsGetNoMass) {
  Vector mu(3), nu(2);
  mu << 0.5, 0.0, 0.5;
  nu << 0.5, 0.5;
  Matrix c(3, 2);
  c << 0, 1, 2, 2, 1, 0;
  const auto r = solve_entropic_ot(mu, nu, c, config(0.1));
  EXPECT_EQ(r.plan.coupling.row(1).sum(), 0.0);
  EXPECT_LE(marginal_residual(r.plan.coupling, mu, nu), 1e-9);
}

TEST(OtObjective, Examples) {
  const Vector w = Vector::Constant(2, 0.5);
  EXPECT_NEAR(ot_objective(product_coupling(w, w), Matrix::Zero(2, 2), w, w, 0.3), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(ot_objective(Matrix::Ones(1, 1), Matrix::Constant(1, 1, 2.0), Vector::Ones(1),
                                Vector::Ones(1), 5.0),
                   2.0);
  Matrix c(2, 2);
  c << 0, 1, 1, 0;
  const auto r = solve_entropic_ot(w, w, c, config(0.01));
  EXPECT_LE(ot_objective(r.plan.coupling, c, w, w, 0.01), ot_objective(product_coupling(w, w), c, w, w, 0.01));
}

TEST(OtObjective, AgreesWithOracleFormula) {
  std::mt19937_64 gen(3);
  const Vector mu = random_simplex(4, gen), nu = random_simplex(3, gen);
  const Matrix c = random_cost(4, 3, gen);
  const Matrix p = random_cost(4, 3, gen) * 0.1;
  EXPECT_NEAR(ot_objective(p, c, mu, nu, 0.2), oracle_ot_objective(p, c, mu, nu, 0.2), 1e-13);
  EXPECT_NEAR(uot_objective(p, c, mu, nu, 0.2, 0.7), oracle_uot_objective(p, c, mu, nu, 0.2, 0.7), 1e-13);
}

TEST(SolveEntropicUot, SingleAtomsZeroCost) {
  const auto r =
      solve_entropic_uot(Vector::Ones(1), Vector::Ones(1), Matrix::Zero(1, 1), config(0.1, 1.0));
  EXPECT_NEAR(r.plan.coupling(0, 0), 1.0, 1e-9);
}

TEST(SolveEntropicUot, RequiresKappa) {
  EXPECT_THROW(solve_entropic_uot(Vector::Ones(1), Vector::Ones(1), Matrix::Zero(1, 1), config(0.1)),
               InvalidArgument);
}

TEST(SolveEntropicUot, LargeKappaApproachesBalanced) {
  const Vector w = Vector::Constant(2, 0.5);
  Matrix c(2, 2);
  c << 0, 1, 1, 0;
  const auto b = solve_entropic_ot(w, w, c, config(0.01));
  const auto u = solve_entropic_uot(w, w, c, config(0.01, 1e6));
  EXPECT_LE((b.plan.coupling - u.plan.coupling).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(SolveEntropicUot, FarAtomLosesMassAgainstGridSearch) {
  Vector mu(2), nu(1);
  mu << 1.0, 1.0;
  nu << 1.0;
  Matrix c(2, 1);
  c << 0.0, 4.0;  // squared distance to the far atom
  const double eps = 0.1, kappa = 1.0;
  const auto r = solve_entropic_uot(mu, nu, c, config(eps, kappa));
  ASSERT_TRUE(r.plan.converged);

  // Coarse grid then local refinement over nonnegative 2x1 couplings.
  double best = kInfinity, ba = 0.0, bb = 0.0;
  auto scan = [&](double a0, double a1, double b0, double b1, int steps) {
    for (int i = 0; i <= steps; ++i)
      for (int k = 0; k <= steps; ++k) {
        Matrix p(2, 1);
        p << a0 + (a1 - a0) * i / steps, b0 + (b1 - b0) * k / steps;
        if (p.minCoeff() < 0.0) continue;
        const double v = oracle_uot_objective(p, c, mu, nu, eps, kappa);
        if (v < best) {
          best = v;
          ba = p(0, 0);
          bb = p(1, 0);
        }
      }
  };
  scan(0.0, 2.0, 0.0, 2.0, 400);
  for (double h = 0.01; h > 1e-7; h /= 10.0) scan(ba - h, ba + h, bb - h, bb + h, 40);

  EXPECT_LT(r.plan.coupling(1, 0), 1.0);
  EXPECT_NEAR(r.plan.coupling(0, 0), ba, 1e-6);
  EXPECT_NEAR(r.plan.coupling(1, 0), bb, 1e-6);
  EXPECT_LE(uot_objective(r.plan.coupling, c, mu, nu, eps, kappa), best + 1e-10);
}

TEST(SolveEntropicUot, MarginalDeviationDecreasesWithKappa) {
  std::mt19937_64 gen(12);
  const Vector mu = random_simplex(5, gen) * 1.3, nu = random_simplex(6, gen) * 0.8;
  const Matrix c = random_cost(5, 6, gen);
  double prev = kInfinity;
  for (double kappa : {0.1, 1.0, 10.0, 1e3, 1e6}) {
    const auto r = solve_entropic_uot(mu, nu, c, config(0.05, kappa));
    EXPECT_TRUE(r.plan.converged) << kappa;
    auto [p, q] = marginals(r.plan);
    const double dev = kl_divergence(p, mu) + kl_divergence(q, nu);
    EXPECT_LE(dev, prev + 1e-12) << kappa;
    prev = dev;
  }
}

TEST(SolveEntropicUot, BeatsRandomPerturbations) {
  std::mt19937_64 gen(41);
  const Vector mu = random_simplex(3, gen), nu = random_simplex(3, gen) * 2.0;
  const Matrix c = random_cost(3, 3, gen);
  const double eps = 0.05, kappa = 0.5;
  const auto r = solve_entropic_uot(mu, nu, c, config(eps, kappa));
  const double opt = oracle_uot_objective(r.plan.coupling, c, mu, nu, eps, kappa);
  std::normal_distribution<double> g(0.0, 1e-3);
  for (int t = 0; t < 200; ++t) {
    Matrix p = r.plan.coupling;
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) p(i, j) = std::max(1e-12, p(i, j) * (1.0 + g(gen)));
    EXPECT_GE(oracle_uot_objective(p, c, mu, nu, eps, kappa), opt - 1e-12);
  }
}

TEST(KernelForm, ProductPlanZeroCost) {
  const Vector w = Vector::Constant(3, 1.0 / 3.0);
  const auto pot = kernel_form(product_coupling(w, w), Matrix::Zero(3, 3), w, w, 0.1);
  EXPECT_LE(pot.f.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(pot.g.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KernelForm, SolverPotentialsReproducePlan) {
  std::mt19937_64 gen(99);
  for (double eps : {0.1, 0.01}) {
    const Vector mu = random_simplex(10, gen), nu = random_simplex(10, gen);
    const Matrix c = random_cost(10, 10, gen);
    const auto r = solve_entropic_ot(mu, nu, c, config(eps));
    EXPECT_LE((reconstruct_plan(r.potentials, c, mu, nu, eps) - r.plan.coupling).cwiseAbs().maxCoeff(), 1e-10);
    const auto pot = kernel_form(r.plan.coupling, c, mu, nu, eps);
    EXPECT_NEAR(pot.f.dot(mu), 0.0, 1e-12);
    EXPECT_LE((reconstruct_plan(pot, c, mu, nu, eps) - r.plan.coupling).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(KernelForm, GaugeShiftLeavesPlanUnchanged) {
  std::mt19937_64 gen(5);
  const Vector mu = random_simplex(4, gen), nu = random_simplex(5, gen);
  const Matrix c = random_cost(4, 5, gen);
  const auto r = solve_entropic_ot(mu, nu, c, config(0.05));
  DualPotentials shifted = r.potentials;
  shifted.f.array() += 0.37;
  shifted.g.array() -= 0.37;
  EXPECT_LE((reconstruct_plan(shifted, c, mu, nu, 0.05) - reconstruct_plan(r.potentials, c, mu, nu, 0.05))
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
}

TEST(KernelForm, ZeroEntryOnSupportThrows) {
  const Vector w = Vector::Constant(2, 0.5);
  EXPECT_THROW(kernel_form(Matrix(0.5 * Matrix::Identity(2, 2)), Matrix::Zero(2, 2), w, w, 0.1), InvalidArgument);
}
