#include "gwt/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

using namespace gwt;

namespace {

PointCloud parse(const std::string& text, PointCloudFormat fmt = {}) {
  std::istringstream in(text);
  return parse_point_cloud(in, fmt, "input.csv");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gwt_test_io_" + name);
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

TEST(PointCloudCsv, WeightColumn) {
  const auto pc = parse("x,y,weight\n0,0,1\n1,0,3\n");
  EXPECT_EQ(pc.measure.points().rows(), 2);
  EXPECT_EQ(pc.measure.dimension(), 2);
  EXPECT_EQ(pc.measure.weights()[0], 1.0);
  EXPECT_EQ(pc.measure.weights()[1], 3.0);
  EXPECT_FALSE(pc.labels);
}

TEST(PointCloudCsv, DefaultWeightsAreUniform) {
  const auto pc = parse("0 0\n1 0\n0 1\n1 1\n");
  ASSERT_EQ(pc.measure.weights().size(), 4);
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(pc.measure.weights()[i], 0.25);
}

TEST(PointCloudCsv, LabelsAndComments) {
  const auto pc = parse("# two points\nx;y;label\n0;1;-1\n\n2;3;1\n");
  ASSERT_TRUE(pc.labels);
  EXPECT_EQ(pc.labels->rows(), 2);
  EXPECT_EQ((*pc.labels)(0, 0), -1.0);
  EXPECT_EQ(pc.measure.points()(1, 1), 3.0);
  EXPECT_EQ(pc.space().size(), 2);
}

TEST(PointCloudCsv, HeaderlessWithFormat) {
  PointCloudFormat fmt;
  fmt.dimension = 2;
  fmt.hasWeight = true;
  fmt.labelDimension = 1;
  const auto pc = parse("0,0,2,1\n1,1,2,-1\n", fmt);
  EXPECT_EQ(pc.measure.weights()[0], 2.0);
  EXPECT_EQ((*pc.labels)(1, 0), -1.0);
}

TEST(PointCloudCsv, NegativeWeightNamesTheLine) {
  const std::string msg = parse_error("x,y,weight\n0,0,1\n1,0,-1\n");
  EXPECT_NE(msg.find("input.csv:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("weight"), std::string::npos) << msg;
}

TEST(PointCloudCsv, MalformedInputs) {
  EXPECT_NE(parse_error("").find("no data rows"), std::string::npos);
  EXPECT_NE(parse_error("# only a comment\n").find("no data rows"), std::string::npos);
  EXPECT_NE(parse_error("0,0\nnan,1\n").find("input.csv:2"), std::string::npos);
  EXPECT_NE(parse_error("0,0\n1,inf\n").find("input.csv:2"), std::string::npos);
  EXPECT_NE(parse_error("0,0\n1\n").find("input.csv:2"), std::string::npos);
  EXPECT_NE(parse_error("0,0\n1,abc\n").find("input.csv:2"), std::string::npos);
  EXPECT_NE(parse_error("x,weight\n0,0\n1,0\n").find("zero"), std::string::npos);
}

TEST(PointCloudCsv, MissingFileIsIoError) {
  EXPECT_THROW(load_point_cloud("/nonexistent/cloud.csv"), IoError);
}

TEST(PointCloudCsv, WriteThenReadIsExact) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g;
  Matrix p(7, 3), l(7, 1);
  Vector w(7);
  for (Index i = 0; i < 7; ++i) {
    for (Index c = 0; c < 3; ++c) p(i, c) = g(gen);
    w[i] = std::abs(g(gen)) + 0.1;
    l(i, 0) = g(gen) > 0 ? 1.0 : -1.0;
  }
  const PointCloud pc{DiscreteMeasure(p, w), l};
  const auto path = temp_path("cloud.csv");
  save_point_cloud(pc, path);
  const auto back = load_point_cloud(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(same_bits(back.measure.points(), p));
  EXPECT_TRUE(same_bits(back.measure.weights(), w));
  ASSERT_TRUE(back.labels);
  EXPECT_TRUE(same_bits(*back.labels, l));
}

TEST(RunConfigJson, RoundTrip) {
  RunConfig c;
  c.command = "solve-ugw";
  c.inputs = {"a.csv", "b.csv"};
  c.epsilon = 1.0 / 3.0;
  c.kappa = 0.1;
  c.seed = std::numeric_limits<std::uint64_t>::max();
  c.parameters = {{"n", 50}};
  EXPECT_EQ(config_from_string(config_to_string(c)), c);
  c.kappa.reset();
  EXPECT_EQ(config_from_string(config_to_string(c)), c);
}

TEST(RunConfigJson, RandomConfigsRoundTrip) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int t = 0; t < 200; ++t) {
    RunConfig c;
    c.command = "cmd" + std::to_string(t);
    c.epsilon = std::exp(u(gen));
    if (t % 2) c.kappa = std::exp(u(gen));
    c.labelWeight = u(gen);
    c.tolerance = std::exp(u(gen));
    c.maxIterations = static_cast<int>(gen() % 100000);
    c.seed = gen();
    c.depth = static_cast<int>(gen() % 5) + 1;
    c.normalizeMetrics = t % 3 == 0;
    c.strict = t % 5 == 0;
    c.output = "out" + std::to_string(t);
    ASSERT_EQ(config_from_string(config_to_string(c)), c) << config_to_string(c);
  }
}

TEST(RunConfigJson, RejectsUnknownVersion) {
  Json j = RunConfig{};
  j["version"] = 99;
  EXPECT_ANY_THROW(j.get<RunConfig>());
}

TEST(ResultDocumentJson, SaveLoadIsBitExact) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ResultDocument d;
  d.config.command = "solve-gw";
  Matrix p(4, 3);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = u(gen) / 7.0;
  p(0, 0) = 0.0;
  p(1, 1) = std::numeric_limits<double>::denorm_min();
  d.plan = p;
  d.sourceWeights = p.rowwise().sum();
  d.targetWeights = p.colwise().sum().transpose();
  d.convergence = {false, 17, std::numeric_limits<double>::infinity(), 423};
  d.singularValues = {1.0, 0.1 + 0.2};
  d.diagnostics["nan"] = std::numeric_limits<double>::quiet_NaN();
  d.diagnostics["distortion"] = u(gen);

  const auto path = temp_path("result.json");
  save_result(d, path);
  const auto back = load_result(path);
  std::filesystem::remove(path);
  ASSERT_TRUE(back.plan);
  EXPECT_TRUE(same_bits(*back.plan, p));
  EXPECT_TRUE(same_bits(*back.sourceWeights, *d.sourceWeights));
  EXPECT_TRUE(same_bits(*back.targetWeights, *d.targetWeights));
  EXPECT_EQ(back.convergence, d.convergence);
  EXPECT_FALSE(back.convergence.converged);
  EXPECT_TRUE(std::isinf(back.convergence.residual));
  EXPECT_EQ(back.singularValues, d.singularValues);
  EXPECT_TRUE(std::isnan(back.diagnostics.at("nan")));
  EXPECT_EQ(back.diagnostics.at("distortion"), d.diagnostics.at("distortion"));
  EXPECT_EQ(back.config, d.config);
  EXPECT_TRUE(back.sourcePartition.empty());
  EXPECT_TRUE(back.targetPartition.empty());
  EXPECT_FALSE(back.kernel);
  EXPECT_EQ(result_to_json(d)["converged"], false);
}

TEST(ResultDocumentJson, PlanRoundTripThroughDocument) {
  TransportPlan plan;
  plan.coupling = Matrix::Constant(2, 2, 0.25);
  plan.sourceWeights = plan.targetWeights = Vector::Constant(2, 0.5);
  plan.iterations = 3;
  plan.convergedResidual = 1e-12;
  ResultDocument d;
  d.config.epsilon = 0.05;
  attach_plan(d, plan);
  const auto back = document_plan(result_from_json(result_to_json(d)));
  EXPECT_TRUE(same_bits(back.coupling, plan.coupling));
  EXPECT_EQ(back.iterations, 3);
  EXPECT_EQ(back.epsilon, 0.05);
  EXPECT_TRUE(back.converged);
}

TEST(ResultDocumentJson, RejectsForeignDocuments) {
  EXPECT_ANY_THROW(result_from_json(Json{{"format", "other"}, {"version", 1}}));
  Json j = result_to_json(ResultDocument{});
  j["version"] = 2;
  EXPECT_ANY_THROW(result_from_json(j));
}

TEST(RotatingDiskDocument, CellScenarioRoundTrip) {
  RotatingDiskScenario sc;
  sc.n = 12;
  sc.theta = 0.1 * 7;
  sc.noiseMagnitude = 2.5;
  sc.seed = 99;
  const auto cell = run_rotating_disk_cell(sc);
  const auto doc = result_from_json(result_to_json(rotating_disk_cell_document(cell)));
  const auto again = run_rotating_disk_cell(cell_scenario(doc));
  EXPECT_EQ(again.errorOt, doc.diagnostics.at("e_ot"));
  EXPECT_EQ(again.errorGw, doc.diagnostics.at("e_gw"));
}

TEST(RotatingDiskDocument, TableSchema) {
  RotatingDiskConfig cfg;
  cfg.n = 8;
  cfg.angles = {0.5};
  cfg.repetitions = 1;
  cfg.sweepMagnitudes = {1.0};
  cfg.threads = 1;
  const auto rep = run_rotating_disk(cfg);
  std::ostringstream a, b;
  write_rotating_disk_table(a, rep);
  write_noise_sweep_table(b, rep);
  std::istringstream ta(a.str()), tb(b.str());
  std::string line;
  std::getline(ta, line);
  EXPECT_EQ(line.rfind("# config {", 0), 0u);
  std::getline(ta, line);
  EXPECT_EQ(line, "theta_deg,mean_e_ot,mean_e_gw,mean_e_ot_noisy,mean_e_gw_noisy,unconverged");
  std::getline(ta, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  std::getline(tb, line);
  std::getline(tb, line);
  EXPECT_EQ(line, "m,mean_e_ot,mean_e_gw,unconverged");
}
