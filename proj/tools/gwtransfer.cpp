// gwtransfer: command-line front end for the solvers and experiments.
//
// Exit codes: 0 success, 1 usage or input error, 2 solver non-convergence
// under --strict.

#include "gwt/gwt.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace gwt;

constexpr std::uint64_t kDefaultTwoDiskSeed = 3;

struct Options {
  std::optional<double> epsilon;
  std::optional<double> kappa;
  double labelWeight = 1.0;
  double tolerance = 1e-9;
  int maxIterations = 100000;
  std::optional<std::uint64_t> seed;
  std::optional<int> depth;
  std::optional<bool> normalizeMetrics;
  std::string output;
  bool strict = false;
  unsigned threads = 0;

  bool hasWeight = false;
  Index labelDimension = 0;
  std::optional<Index> dimension;

  std::vector<std::string> inputs;
  bool cluster = false;
  std::string marginals = "coupling";
  std::string sourcePath, targetPath;
  std::optional<Index> n;
  std::optional<int> repetitions;
  std::string cellsDir;
  std::string cellPath;
  std::optional<int> seedCount;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

PointCloudFormat format_of(const Options& o) { return {o.dimension, o.hasWeight, o.labelDimension}; }

PointCloud load(const Options& o, std::size_t i) { return load_point_cloud(o.inputs.at(i), format_of(o)); }

RunConfig config_of(const Options& o, const std::string& command, double epsilon) {
  RunConfig c;
  c.command = command;
  c.inputs = o.inputs;
  c.epsilon = epsilon;
  c.kappa = o.kappa;
  c.labelWeight = o.labelWeight;
  c.tolerance = o.tolerance;
  c.maxIterations = o.maxIterations;
  c.seed = o.seed.value_or(0);
  c.depth = o.depth.value_or(1);
  c.normalizeMetrics = o.normalizeMetrics.value_or(false);
  c.strict = o.strict;
  c.output = o.output;
  return c;
}

SolverConfig solver_config(const Options& o, double epsilon) {
  SolverConfig s;
  s.epsilon = epsilon;
  s.kappa = o.kappa;
  s.tolerance = o.tolerance;
  s.maxIterations = o.maxIterations;
  return s;
}

MarginalSource marginal_source(const Options& o) {
  if (o.marginals == "coupling") return MarginalSource::Coupling;
  if (o.marginals == "input") return MarginalSource::Input;
  throw UsageError("--marginals must be 'coupling' or 'input'");
}

// Writes `text` to --output (printing `summary`) or to stdout.
void emit(const Options& o, const std::string& text, const std::string& summary) {
  if (o.output.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(o.output);
  if (!out) throw IoError("cannot write " + o.output);
  out << text;
  if (!out) throw IoError("write failed: " + o.output);
  std::cout << summary << '\n';
}

void emit(const Options& o, const ResultDocument& doc, const std::string& summary) {
  emit(o, result_to_json(doc).dump(1) + "\n", summary);
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::string convergence_summary(const ConvergenceSummary& c) {
  return "converged=" + std::string(c.converged ? "true" : "false") +
         " iterations=" + std::to_string(c.iterations) + " residual=" + fmt(c.residual);
}

int finish(const Options& o, bool converged, const std::string& what) {
  if (converged) return 0;
  std::cerr << "warning: " << what << " did not converge\n";
  return o.strict ? 2 : 0;
}

void require_inputs(const Options& o, std::size_t count, const std::string& command) {
  if (o.inputs.size() != count)
    throw UsageError(command + " expects " + std::to_string(count) + " input files, got " +
                     std::to_string(o.inputs.size()));
}

double diameter_scale(const MetricMeasureSpace& s, const Options& o) {
  const double d = s.distances().maxCoeff();
  return o.normalizeMetrics.value_or(false) && d > 0.0 ? d : 1.0;
}

// ---------------------------------------------------------------------------

int run_solve_linear(const Options& o, bool unbalanced) {
  const std::string cmd = unbalanced ? "solve-uot" : "solve-ot";
  require_inputs(o, 2, cmd);
  if (unbalanced && !o.kappa) throw UsageError(cmd + " requires --kappa");
  if (!unbalanced && o.kappa) throw UsageError(cmd + " does not take --kappa; use solve-uot");
  const PointCloud a = load(o, 0), b = load(o, 1);
  if (a.measure.dimension() != b.measure.dimension())
    throw InvalidArgument("inputs have different dimensions");
  const double scale = diameter_scale(a.space(), o);
  const Matrix cost = squared_euclidean_cost(a.measure.points() / scale, b.measure.points() / scale);
  const double eps = o.epsilon.value_or(1e-2);
  const SolverConfig cfg = solver_config(o, eps);

  ResultDocument doc;
  doc.config = config_of(o, cmd, eps);
  SinkhornResult r;
  double objective = 0.0;
  if (unbalanced) {
    r = solve_entropic_uot(a.measure.weights(), b.measure.weights(), cost, cfg);
    objective = uot_objective(r.plan.coupling, cost, a.measure.weights(), b.measure.weights(), eps, *o.kappa);
  } else {
    const Vector mu = a.measure.normalized().weights(), nu = b.measure.normalized().weights();
    r = solve_entropic_ot(mu, nu, cost, cfg);
    objective = ot_objective(r.plan.coupling, cost, mu, nu, eps);
  }
  attach_plan(doc, r.plan);
  doc.diagnostics["objective"] = objective;
  doc.diagnostics["transport_cost"] = cost.cwiseProduct(r.plan.coupling).sum();
  doc.diagnostics["plan_mass"] = r.plan.mass();
  doc.diagnostics["distance_scale"] = scale;
  emit(o, doc,
       cmd + ": " + convergence_summary(doc.convergence) + " objective=" + fmt(objective) +
           " mass=" + fmt(r.plan.mass()));
  return finish(o, r.plan.converged, cmd);
}

int run_solve_gw(const Options& o, const std::string& cmd) {
  require_inputs(o, 2, cmd);
  const bool fused = cmd == "solve-fgw";
  if (cmd == "solve-ugw" && !o.kappa) throw UsageError(cmd + " requires --kappa");
  if (cmd == "solve-gw" && o.kappa) throw UsageError(cmd + " does not take --kappa; use solve-ugw");
  const PointCloud a = load(o, 0), b = load(o, 1);
  const double eps = o.epsilon.value_or(1e-2);

  GwProblem pb;
  pb.source = a.space();
  pb.target = b.space();
  pb.epsilon = eps;
  pb.kappa = o.kappa;
  pb.labelWeight = o.labelWeight;
  pb.inner = solver_config(o, eps);
  pb.normalizeDistances = o.normalizeMetrics.value_or(false);
  GwResult r;
  if (fused) {
    if (!a.labels || !b.labels) throw UsageError(cmd + " requires label columns in both inputs");
    pb.sourceLabels = a.labels;
    pb.targetLabels = b.labels;
    r = solve_entropic_fgw(pb);
  } else if (o.kappa) {
    r = solve_entropic_ugw(pb);
  } else {
    r = solve_entropic_gw(pb);
  }

  const double scale = diameter_scale(pb.source, o);
  const double distortion =
      gw_distortion(r.plan.coupling, pb.source.distances() / scale, pb.target.distances() / scale);
  ResultDocument doc;
  doc.config = config_of(o, cmd, eps);
  attach_plan(doc, r.plan);
  doc.convergence.innerIterations = r.innerIterations;
  doc.diagnostics["distortion"] = distortion;
  doc.diagnostics["objective"] = gw_objective(r.plan.coupling, pb);
  doc.diagnostics["plan_mass"] = r.plan.mass();
  doc.diagnostics["mass_scale"] = r.massScale;
  doc.diagnostics["distance_scale"] = scale;
  emit(o, doc, cmd + ": " + convergence_summary(doc.convergence) + " distortion=" + fmt(distortion));
  return finish(o, r.plan.converged, cmd);
}

int run_transfer(const Options& o) {
  require_inputs(o, 1, "transfer");
  ResultDocument doc = load_result(o.inputs[0]);
  const TransportPlan plan = document_plan(doc);
  const TransferOperator op = build_transfer(plan, marginal_source(o));
  doc.config.command = "transfer";
  doc.config.inputs = o.inputs;
  doc.config.output = o.output;
  doc.config.parameters["marginals"] = o.marginals;
  doc.kernel = op.kernel;
  std::string summary = "transfer: kernel " + detail::shape(op.kernel.rows(), op.kernel.cols());
  if (o.cluster) {
    SpectralPartition part = spectral_cluster(op);
    if (!o.sourcePath.empty() && !o.targetPath.empty()) {
      const auto sx = load_point_cloud(o.sourcePath, format_of(o)).space();
      const auto sy = load_point_cloud(o.targetPath, format_of(o)).space();
      part.shapeScores = shape_scores(part, plan.coupling, sx.distances(), sy.distances());
    }
    attach_partition(doc, op, part);
    summary += " sigma1=" + fmt(part.sigma1) + " sigma=" + fmt(part.sigma);
    for (const auto& w : part.warnings) std::cerr << "warning: " << w << '\n';
  }
  emit(o, doc, summary);
  return 0;
}

int run_cluster(const Options& o) {
  require_inputs(o, 3, "cluster");
  ResultDocument doc = load_result(o.inputs[0]);
  const TransportPlan plan = document_plan(doc);
  const auto sx = load(o, 1).space(), sy = load(o, 2).space();
  const double scale = diameter_scale(sx, o);
  NestedOptions nopts;
  nopts.marginals = marginal_source(o);
  const int depth = o.depth.value_or(1);
  const auto h = nested_cluster(sx.rescaled(scale), sy.rescaled(scale), plan, depth, nopts);
  doc.config.command = "cluster";
  doc.config.inputs = o.inputs;
  doc.config.output = o.output;
  doc.config.depth = depth;
  doc.config.normalizeMetrics = o.normalizeMetrics.value_or(false);
  doc.config.parameters["marginals"] = o.marginals;
  auto [src, tgt] = h.leaf_labels(plan.rows(), plan.cols());
  doc.sourcePartition = src;
  doc.targetPartition = tgt;
  doc.shapeScores.clear();
  for (int id : h.leaves()) doc.shapeScores.push_back(h.nodes[id].shapeScore);
  doc.extra["hierarchy"] = hierarchy_to_json(h);
  emit(o, doc, "cluster: depth=" + std::to_string(depth) + " leaves=" + std::to_string(h.leaves().size()));
  return 0;
}

int run_rotating_disk(const Options& o) {
  if (!o.cellPath.empty()) {
    const ResultDocument in = load_result(o.cellPath);
    const RotatingDiskCell cell = run_rotating_disk_cell(cell_scenario(in));
    const ResultDocument doc = rotating_disk_cell_document(cell);
    emit(o, doc,
         "rotating-disk cell: e_ot=" + fmt(cell.errorOt) + " e_gw=" + fmt(cell.errorGw) + " " +
             convergence_summary(doc.convergence));
    return finish(o, doc.convergence.converged, "rotating-disk cell");
  }
  RotatingDiskConfig cfg;
  if (o.n) cfg.n = *o.n;
  if (o.epsilon) cfg.epsilon = *o.epsilon;
  if (o.repetitions) cfg.repetitions = *o.repetitions;
  cfg.baseSeed = o.seed.value_or(0);
  cfg.tolerance = o.tolerance;
  cfg.maxIterations = o.maxIterations;
  cfg.threads = o.threads;
  const RotatingDiskReport rep = run_rotating_disk(cfg);

  int unconverged = 0;
  for (const auto& c : rep.cells) unconverged += !c.otConverged + !c.gwConverged;
  if (!o.cellsDir.empty()) {
    std::filesystem::create_directories(o.cellsDir);
    for (std::size_t i = 0; i < rep.cells.size(); ++i) {
      ResultDocument d = rotating_disk_cell_document(rep.cells[i]);
      d.config.output = (std::filesystem::path(o.cellsDir) / ("cell_" + std::to_string(i) + ".json")).string();
      save_result(d, d.config.output);
    }
  }
  std::ostringstream table;
  write_rotating_disk_table(table, rep);
  if (!o.output.empty()) {
    std::filesystem::path sweep = o.output;
    sweep.replace_filename(sweep.stem().string() + "_noise" + sweep.extension().string());
    std::ofstream out(sweep);
    if (!out) throw IoError("cannot write " + sweep.string());
    write_noise_sweep_table(out, rep);
  } else {
    table << '\n';
    write_noise_sweep_table(table, rep);
  }
  emit(o, table.str(),
       "rotating-disk: " + std::to_string(rep.rows.size()) + " angles, " + std::to_string(rep.cells.size()) +
           " cells, unconverged solves=" + std::to_string(unconverged));
  return finish(o, unconverged == 0, "rotating-disk");
}

int run_two_disks(const Options& o) {
  TwoDiskScenario sc;
  sc.seed = o.seed.value_or(kDefaultTwoDiskSeed);
  if (o.n) sc.n = *o.n;
  if (o.epsilon) sc.epsilon = *o.epsilon;
  sc.tolerance = o.tolerance;
  sc.maxIterations = o.maxIterations;
  const TwoDiskReport rep = run_two_disks(sc);

  ResultDocument doc;
  doc.config = config_of(o, "exp two-disks", sc.epsilon);
  doc.config.seed = sc.seed;
  doc.config.parameters = {{"scenario", scenario_to_json(sc)}};
  attach_plan(doc, rep.gw.plan);
  attach_partition(doc, rep.gw.op, rep.gw.partition);
  doc.diagnostics["rand_index_source"] = rep.gw.randIndexSource;
  doc.diagnostics["rand_index_target"] = rep.gw.randIndexTarget;
  doc.diagnostics["ot_rand_index_source"] = rep.ot.randIndexSource;
  doc.diagnostics["ot_rand_index_target"] = rep.ot.randIndexTarget;
  doc.diagnostics["ot_sigma"] = rep.ot.partition.sigma;
  doc.extra["ot_partitions"] = {{"source", rep.ot.partition.sourcePartition},
                                {"target", rep.ot.partition.targetPartition}};
  doc.extra["ot_converged"] = rep.ot.plan.converged;

  bool converged = rep.gw.plan.converged && rep.ot.plan.converged;
  if (o.seedCount) {
    int successes = 0;
    for (int s = 0; s < *o.seedCount; ++s) {
      TwoDiskScenario other = sc;
      other.seed = static_cast<std::uint64_t>(s);
      const auto r = run_two_disks(other);
      successes += r.gw_success();
      converged = converged && r.gw.plan.converged && r.ot.plan.converged;
    }
    doc.diagnostics["success_rate"] = static_cast<double>(successes) / *o.seedCount;
  }
  doc.convergence.converged = converged;
  emit(o, doc,
       "two-disks: seed=" + std::to_string(sc.seed) + " gw_rand=" + fmt(rep.gw.randIndexSource) + "/" +
           fmt(rep.gw.randIndexTarget) + " ot_rand=" + fmt(rep.ot.randIndexSource) + "/" +
           fmt(rep.ot.randIndexTarget));
  return finish(o, converged, "two-disks");
}

int run_pipeline(const Options& o) {
  require_inputs(o, 2, "exp labelled-pipeline");
  const PointCloud a = load(o, 0), b = load(o, 1);
  if (!a.labels || !b.labels) throw UsageError("labelled-pipeline requires label columns in both inputs");
  PipelineConfig cfg;
  if (o.epsilon) cfg.epsilon = *o.epsilon;
  if (o.kappa) cfg.kappa = *o.kappa;
  cfg.labelWeight = o.labelWeight;
  cfg.depth = o.depth.value_or(3);
  cfg.normalizeMetrics = o.normalizeMetrics.value_or(true);
  cfg.tolerance = o.tolerance;
  cfg.maxIterations = o.maxIterations;
  cfg.marginals = marginal_source(o);
  const PipelineReport rep = run_labelled_pipeline(a.labelled(), b.labelled(), cfg);

  ResultDocument doc;
  doc.config = config_of(o, "exp labelled-pipeline", cfg.epsilon);
  doc.config.kappa = cfg.kappa;
  doc.config.depth = cfg.depth;
  doc.config.normalizeMetrics = cfg.normalizeMetrics;
  doc.config.parameters["marginals"] = o.marginals;
  attach_plan(doc, rep.fgw.plan);
  doc.convergence.innerIterations = rep.fgw.innerIterations;
  auto [src, tgt] = rep.hierarchy.leaf_labels(rep.fgw.plan.rows(), rep.fgw.plan.cols());
  doc.sourcePartition = src;
  doc.targetPartition = tgt;
  doc.shapeScores = rep.leaf_shape_scores();
  doc.diagnostics["distance_scale"] = rep.distanceScale;
  doc.diagnostics["cross_label_mass_gw"] = rep.crossLabelMassGw;
  doc.diagnostics["cross_label_mass_ot"] = rep.crossLabelMassOt;
  doc.diagnostics["plan_mass"] = rep.fgw.plan.mass();
  doc.extra["hierarchy"] = hierarchy_to_json(rep.hierarchy);
  doc.extra["ot_plan"] = detail::matrix_to_json(rep.ot.plan.coupling);
  doc.extra["ot_converged"] = rep.ot.plan.converged;
  const bool converged = rep.fgw.plan.converged && rep.ot.plan.converged;
  doc.convergence.converged = converged;
  emit(o, doc,
       "labelled-pipeline: leaves=" + std::to_string(rep.hierarchy.leaves().size()) +
           " cross_label_mass=" + fmt(rep.crossLabelMassGw) + " " + convergence_summary(doc.convergence));
  return finish(o, converged, "labelled-pipeline");
}

// ---------------------------------------------------------------------------

void add_globals(CLI::App& app, Options& o) {
  app.add_option("--epsilon", o.epsilon, "entropic regularization")->check(CLI::PositiveNumber);
  app.add_option("--kappa", o.kappa, "marginal penalty (unbalanced solvers)")->check(CLI::PositiveNumber);
  app.add_option("--label-weight", o.labelWeight, "weight of the label cost (fused solver)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--tolerance", o.tolerance, "Sinkhorn stopping tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", o.maxIterations, "Sinkhorn iteration limit")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "random seed (experiments)");
  app.add_option("--depth", o.depth, "nested clustering depth")->check(CLI::PositiveNumber);
  app.add_flag("--normalize-metrics,!--no-normalize-metrics", o.normalizeMetrics,
               "divide distances by the source diameter");
  app.add_option("--output,-o", o.output, "output file (stdout then gets a one-line summary)");
  app.add_flag("--strict", o.strict, "exit with status 2 when a solver does not converge");
  app.add_option("--threads", o.threads, "worker threads for experiment grids (0: all cores)");
  app.add_flag("--has-weight", o.hasWeight, "headerless input: weight column after the coordinates");
  app.add_option("--label-dim", o.labelDimension, "headerless input: number of trailing label columns")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--dim", o.dimension, "headerless input: number of coordinate columns")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transfer operators from entropic (Gromov-)Wasserstein plans"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  add_globals(app, o);

  auto* ot = app.add_subcommand("solve-ot", "balanced entropic OT, squared Euclidean cost");
  auto* uot = app.add_subcommand("solve-uot", "unbalanced entropic OT (needs --kappa)");
  auto* gw = app.add_subcommand("solve-gw", "balanced entropic GW");
  auto* ugw = app.add_subcommand("solve-ugw", "unbalanced entropic GW (needs --kappa)");
  auto* fgw = app.add_subcommand("solve-fgw", "fused entropic GW on labelled clouds");
  for (auto* s : {ot, uot, gw, ugw, fgw})
    s->add_option("inputs", o.inputs, "source and target point clouds")->required()->check(CLI::ExistingFile);

  auto* tr = app.add_subcommand("transfer", "transfer operator (and spectral split) of a saved plan");
  tr->add_option("plan", o.inputs, "result document with a plan")->required()->check(CLI::ExistingFile);
  tr->add_flag("--cluster", o.cluster, "run spectral clustering");
  tr->add_option("--source", o.sourcePath, "source cloud, for shape scores")->check(CLI::ExistingFile);
  tr->add_option("--target", o.targetPath, "target cloud, for shape scores")->check(CLI::ExistingFile);

  auto* cl = app.add_subcommand("cluster", "nested spectral clustering of a saved plan");
  cl->add_option("inputs", o.inputs, "plan document, source cloud, target cloud")
      ->required()
      ->check(CLI::ExistingFile);
  for (auto* s : {tr, cl})
    s->add_option("--marginals", o.marginals, "operator weights: coupling or input")
        ->check(CLI::IsMember({"coupling", "input"}));

  auto* exp = app.add_subcommand("exp", "experiments");
  exp->require_subcommand(1);
  auto* rd = exp->add_subcommand("rotating-disk", "rotation recovery error table");
  rd->add_option("--n", o.n, "points per cloud")->check(CLI::Range(2, 100000));
  rd->add_option("--repetitions", o.repetitions, "seeds per angle")->check(CLI::PositiveNumber);
  rd->add_option("--cells-dir", o.cellsDir, "write one result document per cell here");
  rd->add_option("--cell", o.cellPath, "re-run the cell stored in this document")->check(CLI::ExistingFile);
  auto* td = exp->add_subcommand("two-disks", "coherent-set detection on two rotating disks");
  td->add_option("--n", o.n, "total number of points (even)");
  td->add_option("--seeds", o.seedCount, "also report the success rate over seeds 0..K-1")
      ->check(CLI::PositiveNumber);
  auto* lp = exp->add_subcommand("labelled-pipeline", "fused unbalanced GW and nested clustering");
  lp->add_option("inputs", o.inputs, "labelled source and target clouds")->required()->check(CLI::ExistingFile);
  lp->add_option("--marginals", o.marginals, "operator weights: coupling or input")
      ->check(CLI::IsMember({"coupling", "input"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (ot->parsed()) return run_solve_linear(o, false);
    if (uot->parsed()) return run_solve_linear(o, true);
    if (gw->parsed()) return run_solve_gw(o, "solve-gw");
    if (ugw->parsed()) return run_solve_gw(o, "solve-ugw");
    if (fgw->parsed()) return run_solve_gw(o, "solve-fgw");
    if (tr->parsed()) return run_transfer(o);
    if (cl->parsed()) return run_cluster(o);
    if (rd->parsed()) return run_rotating_disk(o);
    if (td->parsed()) return run_two_disks(o);
    if (lp->parsed()) return run_pipeline(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
