#ifndef GWT_IO_HPP_
#define GWT_IO_HPP_

// Point-cloud input, run configuration and result documents.
//
// Point clouds are delimiter-separated tables, one point per row. An
// optional header line names the columns:
//   x, y, z or x1..xd   coordinates
//   weight (or w, mass) nonnegative mass, uniform 1/n when absent
//   label or label1..   label vector entries
// Without a header the column layout comes from PointCloudFormat. Fields
// may be separated by commas, semicolons, tabs or spaces; lines starting
// with '#' are ignored.
//
// Result documents are JSON with a format tag and version. Doubles are
// written in the shortest form that parses back to the same value.

#include "gwt/experiments.hpp"
#include "gwt/measures.hpp"
#include "gwt/transfer.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwt {

using Json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input; the message names the source and line.
class ParseError : public InvalidArgument {
 public:
  ParseError(const std::string& origin, std::size_t line, const std::string& what)
      : InvalidArgument(origin + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// Point clouds

/// Column layout of headerless files. `dimension` defaults to whatever is
/// left after the weight and label columns.
struct PointCloudFormat {
  std::optional<Index> dimension;
  bool hasWeight = false;
  Index labelDimension = 0;
};

struct PointCloud {
  DiscreteMeasure measure;
  std::optional<Matrix> labels;

  MetricMeasureSpace space() const { return MetricMeasureSpace(measure); }
  LabelledSpace labelled() const {
    detail::require(labels.has_value(), "PointCloud: no label columns");
    return LabelledSpace(space(), *labels);
  }
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  const bool hard = line.find_first_of(",;") != std::string::npos;
  std::string cur;
  auto flush = [&](bool keepEmpty) {
    const auto b = cur.find_first_not_of(" \t\r");
    const auto e = cur.find_last_not_of(" \t\r");
    std::string f = b == std::string::npos ? std::string() : cur.substr(b, e - b + 1);
    if (keepEmpty || !f.empty()) out.push_back(std::move(f));
    cur.clear();
  };
  for (char c : line) {
    if (hard ? (c == ',' || c == ';') : (c == ' ' || c == '\t')) {
      flush(hard);
    } else {
      cur += c;
    }
  }
  flush(hard);
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

enum class Column { Coordinate, Weight, Label };

inline Column classify_column(const std::string& name) {
  const std::string n = lower(name);
  if (n == "weight" || n == "w" || n == "mass") return Column::Weight;
  if (n.rfind("label", 0) == 0) return Column::Label;
  return Column::Coordinate;
}

}  // namespace detail

/// Parses a point cloud from `in`; `origin` prefixes diagnostics.
inline PointCloud parse_point_cloud(std::istream& in, const PointCloudFormat& format = {},
                                    const std::string& origin = "<input>") {
  std::vector<detail::Column> layout;
  bool haveLayout = false;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lineOf;

  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto fields = detail::split_fields(line);
    if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
    if (!fields[0].empty() && fields[0][0] == '#') continue;

    std::vector<double> values;
    bool numeric = true;
    for (const auto& f : fields) {
      auto v = detail::parse_double(f);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (!numeric) {
      if (!haveLayout && rows.empty()) {
        for (const auto& f : fields) {
          if (f.empty()) throw ParseError(origin, lineNo, "empty column name in header");
          layout.push_back(detail::classify_column(f));
        }
        haveLayout = true;
        continue;
      }
      throw ParseError(origin, lineNo, "non-numeric field in \"" + line + "\"");
    }
    if (!haveLayout) {
      const Index extra = (format.hasWeight ? 1 : 0) + format.labelDimension;
      const Index dim = format.dimension.value_or(static_cast<Index>(values.size()) - extra);
      if (dim < 1 || dim + extra != static_cast<Index>(values.size()))
        throw ParseError(origin, lineNo,
                         "expected " + (format.dimension ? std::to_string(*format.dimension + extra)
                                                         : std::string("more than ") + std::to_string(extra)) +
                             " fields, found " + std::to_string(values.size()));
      layout.assign(static_cast<std::size_t>(dim), detail::Column::Coordinate);
      if (format.hasWeight) layout.push_back(detail::Column::Weight);
      layout.insert(layout.end(), static_cast<std::size_t>(format.labelDimension), detail::Column::Label);
      haveLayout = true;
    }
    if (values.size() != layout.size())
      throw ParseError(origin, lineNo,
                       "expected " + std::to_string(layout.size()) + " fields, found " +
                           std::to_string(values.size()));
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (std::isnan(values[c])) throw ParseError(origin, lineNo, "NaN in column " + std::to_string(c + 1));
      if (!std::isfinite(values[c]))
        throw ParseError(origin, lineNo, "non-finite value in column " + std::to_string(c + 1));
      if (layout[c] == detail::Column::Weight && values[c] < 0.0)
        throw ParseError(origin, lineNo, "negative weight " + fields[c]);
    }
    rows.push_back(std::move(values));
    lineOf.push_back(lineNo);
  }
  if (rows.empty()) throw ParseError(origin, lineNo, "no data rows");

  Index dim = 0, ldim = 0, wcols = 0;
  for (auto c : layout) {
    dim += c == detail::Column::Coordinate;
    ldim += c == detail::Column::Label;
    wcols += c == detail::Column::Weight;
  }
  if (dim < 1) throw ParseError(origin, 1, "no coordinate columns");
  if (wcols > 1) throw ParseError(origin, 1, "more than one weight column");

  const Index n = static_cast<Index>(rows.size());
  Matrix pts(n, dim), labels(n, ldim);
  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  for (Index i = 0; i < n; ++i) {
    Index pc = 0, lc = 0;
    for (std::size_t c = 0; c < layout.size(); ++c) {
      const double v = rows[i][c];
      switch (layout[c]) {
        case detail::Column::Coordinate: pts(i, pc++) = v; break;
        case detail::Column::Label: labels(i, lc++) = v; break;
        case detail::Column::Weight: w[i] = v; break;
      }
    }
  }
  if (wcols == 1 && !(w.sum() > 0.0)) throw ParseError(origin, lineOf.back(), "weights sum to zero");

  PointCloud out{DiscreteMeasure(pts, w), std::nullopt};
  if (ldim > 0) out.labels = std::move(labels);
  return out;
}

inline PointCloud load_point_cloud(const std::filesystem::path& path, const PointCloudFormat& format = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_point_cloud(in, format, path.string());
}

/// Writes a cloud with a header line; the output parses back to the same cloud.
inline void write_point_cloud(std::ostream& out, const PointCloud& cloud) {
  const Matrix& p = cloud.measure.points();
  const Index ldim = cloud.labels ? cloud.labels->cols() : 0;
  for (Index c = 0; c < p.cols(); ++c) out << (c ? "," : "") << 'x' << c + 1;
  out << ",weight";
  for (Index c = 0; c < ldim; ++c) out << ",label" << c + 1;
  out << '\n' << std::setprecision(17);
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index c = 0; c < p.cols(); ++c) out << (c ? "," : "") << p(i, c);
    out << ',' << cloud.measure.weights()[i];
    for (Index c = 0; c < ldim; ++c) out << ',' << (*cloud.labels)(i, c);
    out << '\n';
  }
}

inline void save_point_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_point_cloud(out, cloud);
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace detail {

// JSON has no infinities or NaN; they are stored as strings.
inline Json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    throw InvalidArgument("not a number: " + s);
  }
  return j.get<double>();
}

inline Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number_to_json(v[i]));
  return a;
}

inline Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = number_from_json(j[static_cast<std::size_t>(i)]);
  return v;
}

inline Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index k = 0; k < m.cols(); ++k) data.push_back(number_to_json(m(i, k)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const Json& j) {
  const Index r = j.at("rows").get<Index>(), c = j.at("cols").get<Index>();
  const Json& data = j.at("data");
  require(r >= 0 && c >= 0 && static_cast<Index>(data.size()) == r * c,
          "matrix document: data length does not match " + shape(r, c));
  Matrix m(r, c);
  std::size_t at = 0;
  for (Index i = 0; i < r; ++i)
    for (Index k = 0; k < c; ++k) m(i, k) = number_from_json(data[at++]);
  return m;
}

template <class T>
void get_optional(const Json& j, const char* key, std::optional<T>& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Run configuration

/// Everything needed to repeat a run. `parameters` holds command-specific
/// settings (for example an experiment cell's scenario).
struct RunConfig {
  static constexpr int kVersion = 1;

  std::string command;
  std::vector<std::string> inputs;
  double epsilon = 1e-2;
  std::optional<double> kappa;
  double labelWeight = 1.0;
  double tolerance = 1e-9;
  int maxIterations = 100000;
  std::uint64_t seed = 0;
  int depth = 1;
  bool normalizeMetrics = false;
  bool strict = false;
  std::string output;
  Json parameters = Json::object();

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline void to_json(Json& j, const RunConfig& c) {
  j = Json{{"version", RunConfig::kVersion},
           {"command", c.command},
           {"inputs", c.inputs},
           {"epsilon", c.epsilon},
           {"kappa", c.kappa ? Json(*c.kappa) : Json(nullptr)},
           {"label_weight", c.labelWeight},
           {"tolerance", c.tolerance},
           {"max_iterations", c.maxIterations},
           {"seed", c.seed},
           {"depth", c.depth},
           {"normalize_metrics", c.normalizeMetrics},
           {"strict", c.strict},
           {"output", c.output},
           {"parameters", c.parameters}};
}

inline void from_json(const Json& j, RunConfig& c) {
  const int version = j.at("version").get<int>();
  if (version != RunConfig::kVersion)
    throw InvalidArgument("config: unsupported version " + std::to_string(version));
  c = RunConfig{};
  j.at("command").get_to(c.command);
  j.at("inputs").get_to(c.inputs);
  j.at("epsilon").get_to(c.epsilon);
  detail::get_optional(j, "kappa", c.kappa);
  j.at("label_weight").get_to(c.labelWeight);
  j.at("tolerance").get_to(c.tolerance);
  j.at("max_iterations").get_to(c.maxIterations);
  j.at("seed").get_to(c.seed);
  j.at("depth").get_to(c.depth);
  j.at("normalize_metrics").get_to(c.normalizeMetrics);
  j.at("strict").get_to(c.strict);
  j.at("output").get_to(c.output);
  if (auto it = j.find("parameters"); it != j.end()) c.parameters = *it;
}

inline std::string config_to_string(const RunConfig& c) { return Json(c).dump(); }
inline RunConfig config_from_string(const std::string& s) { return Json::parse(s).get<RunConfig>(); }

inline Json scenario_to_json(const RotatingDiskScenario& s) {
  return {{"n", s.n},           {"theta", s.theta},         {"noise", s.noiseMagnitude},
          {"seed", s.seed},     {"epsilon", s.epsilon},     {"tolerance", s.tolerance},
          {"max_iterations", s.maxIterations}};
}

inline RotatingDiskScenario rotating_disk_scenario_from_json(const Json& j) {
  RotatingDiskScenario s;
  j.at("n").get_to(s.n);
  j.at("theta").get_to(s.theta);
  j.at("noise").get_to(s.noiseMagnitude);
  j.at("seed").get_to(s.seed);
  j.at("epsilon").get_to(s.epsilon);
  j.at("tolerance").get_to(s.tolerance);
  j.at("max_iterations").get_to(s.maxIterations);
  return s;
}

inline Json scenario_to_json(const TwoDiskScenario& s) {
  return {{"n", s.n},           {"theta", s.theta},     {"local_angle", s.localAngle},
          {"seed", s.seed},     {"epsilon", s.epsilon}, {"tolerance", s.tolerance},
          {"max_iterations", s.maxIterations}};
}

inline TwoDiskScenario two_disk_scenario_from_json(const Json& j) {
  TwoDiskScenario s;
  j.at("n").get_to(s.n);
  j.at("theta").get_to(s.theta);
  j.at("local_angle").get_to(s.localAngle);
  j.at("seed").get_to(s.seed);
  j.at("epsilon").get_to(s.epsilon);
  j.at("tolerance").get_to(s.tolerance);
  j.at("max_iterations").get_to(s.maxIterations);
  return s;
}

// ---------------------------------------------------------------------------
// Result documents

struct ConvergenceSummary {
  bool converged = true;
  int iterations = 0;
  double residual = 0.0;
  int innerIterations = 0;

  friend bool operator==(const ConvergenceSummary&, const ConvergenceSummary&) = default;
};

/// One run's output. Absent matrices and empty vectors are written as null
/// and [] respectively; partitions stay empty unless clustering ran.
struct ResultDocument {
  static constexpr int kVersion = 1;

  RunConfig config;
  ConvergenceSummary convergence;
  std::optional<Matrix> plan;
  std::optional<Vector> sourceWeights;
  std::optional<Vector> targetWeights;
  std::optional<Matrix> kernel;
  std::vector<double> singularValues;
  std::vector<int> sourcePartition;
  std::vector<int> targetPartition;
  std::map<std::string, double> diagnostics;
  std::vector<double> shapeScores;
  Json extra = Json::object();
};

inline Json result_to_json(const ResultDocument& d) {
  auto opt_matrix = [](const std::optional<Matrix>& m) { return m ? detail::matrix_to_json(*m) : Json(nullptr); };
  auto opt_vector = [](const std::optional<Vector>& v) { return v ? detail::vector_to_json(*v) : Json(nullptr); };
  auto doubles = [](const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(detail::number_to_json(x));
    return a;
  };
  Json diag = Json::object();
  for (const auto& [k, v] : d.diagnostics) diag[k] = detail::number_to_json(v);
  return {{"format", "gwtransfer-result"},
          {"version", ResultDocument::kVersion},
          {"config", d.config},
          {"converged", d.convergence.converged},
          {"convergence",
           {{"converged", d.convergence.converged},
            {"iterations", d.convergence.iterations},
            {"residual", detail::number_to_json(d.convergence.residual)},
            {"inner_iterations", d.convergence.innerIterations}}},
          {"plan", opt_matrix(d.plan)},
          {"source_weights", opt_vector(d.sourceWeights)},
          {"target_weights", opt_vector(d.targetWeights)},
          {"kernel", opt_matrix(d.kernel)},
          {"singular_values", doubles(d.singularValues)},
          {"partitions", {{"source", d.sourcePartition}, {"target", d.targetPartition}}},
          {"diagnostics", std::move(diag)},
          {"shape_scores", doubles(d.shapeScores)},
          {"extra", d.extra}};
}

inline ResultDocument result_from_json(const Json& j) {
  if (j.value("format", std::string()) != "gwtransfer-result")
    throw InvalidArgument("result document: missing or wrong format tag");
  const int version = j.at("version").get<int>();
  if (version != ResultDocument::kVersion)
    throw InvalidArgument("result document: unsupported version " + std::to_string(version));
  ResultDocument d;
  d.config = j.at("config").get<RunConfig>();
  const Json& c = j.at("convergence");
  d.convergence.converged = c.at("converged").get<bool>();
  d.convergence.iterations = c.at("iterations").get<int>();
  d.convergence.residual = detail::number_from_json(c.at("residual"));
  d.convergence.innerIterations = c.at("inner_iterations").get<int>();
  auto opt_matrix = [&](const char* key, std::optional<Matrix>& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = detail::matrix_from_json(*it);
  };
  auto opt_vector = [&](const char* key, std::optional<Vector>& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = detail::vector_from_json(*it);
  };
  opt_matrix("plan", d.plan);
  opt_matrix("kernel", d.kernel);
  opt_vector("source_weights", d.sourceWeights);
  opt_vector("target_weights", d.targetWeights);
  for (const auto& x : j.at("singular_values")) d.singularValues.push_back(detail::number_from_json(x));
  j.at("partitions").at("source").get_to(d.sourcePartition);
  j.at("partitions").at("target").get_to(d.targetPartition);
  for (const auto& [k, v] : j.at("diagnostics").items()) d.diagnostics[k] = detail::number_from_json(v);
  for (const auto& x : j.at("shape_scores")) d.shapeScores.push_back(detail::number_from_json(x));
  if (auto it = j.find("extra"); it != j.end()) d.extra = *it;
  return d;
}

inline void save_result(const ResultDocument& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << result_to_json(doc).dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline ResultDocument load_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return result_from_json(j);
}

/// Plan fields of a document from a solved plan.
inline void attach_plan(ResultDocument& doc, const TransportPlan& plan) {
  doc.plan = plan.coupling;
  doc.sourceWeights = plan.sourceWeights;
  doc.targetWeights = plan.targetWeights;
  doc.convergence.converged = plan.converged;
  doc.convergence.iterations = plan.iterations;
  doc.convergence.residual = plan.convergedResidual;
}

/// Rebuilds the plan stored in a document (weights default to its marginals).
inline TransportPlan document_plan(const ResultDocument& doc) {
  detail::require(doc.plan.has_value(), "result document has no plan");
  TransportPlan p;
  p.coupling = *doc.plan;
  auto [a, b] = marginals(p.coupling);
  p.sourceWeights = doc.sourceWeights.value_or(a);
  p.targetWeights = doc.targetWeights.value_or(b);
  p.epsilon = doc.config.epsilon;
  p.kappa = doc.config.kappa;
  p.iterations = doc.convergence.iterations;
  p.convergedResidual = doc.convergence.residual;
  p.converged = doc.convergence.converged;
  return p;
}

/// Kernel, singular values, partitions and diagnostics of a spectral split.
inline void attach_partition(ResultDocument& doc, const TransferOperator& op, const SpectralPartition& part) {
  doc.kernel = op.kernel;
  doc.singularValues = {part.sigma1, part.sigma};
  doc.sourcePartition = part.sourcePartition;
  doc.targetPartition = part.targetPartition;
  for (int k = 0; k < 2; ++k) {
    doc.diagnostics["coherence_residual_" + std::to_string(k)] = part.coherenceResidual[k];
    doc.diagnostics["mass_balance_" + std::to_string(k)] = part.massBalance[k];
  }
  doc.diagnostics["leading_residual"] = part.leadingResidual;
  if (part.shapeScores) doc.shapeScores = {(*part.shapeScores)[0], (*part.shapeScores)[1]};
  doc.extra["degenerate"] = part.degenerate;
  doc.extra["ambiguous"] = part.ambiguous;
  if (part.ambiguous) doc.extra["threshold"] = detail::number_to_json(part.threshold);
  if (!part.warnings.empty()) doc.extra["warnings"] = part.warnings;
}

inline Json hierarchy_to_json(const ClusterHierarchy& h) {
  Json nodes = Json::array();
  for (const auto& n : h.nodes) {
    Json node = {{"level", n.level},
                 {"parent", n.parent},
                 {"children", n.children},
                 {"source", n.sourceIndices},
                 {"target", n.targetIndices},
                 {"shape_score", detail::number_to_json(n.shapeScore)}};
    if (!n.stopReason.empty()) node["stop_reason"] = n.stopReason;
    if (n.split) node["sigma"] = detail::number_to_json(n.split->sigma);
    nodes.push_back(std::move(node));
  }
  return {{"nodes", std::move(nodes)}, {"leaves", h.leaves()}};
}

// ---------------------------------------------------------------------------
// Experiment documents and tables

/// Cell document: the config echo holds the scenario, so the cell can be
/// re-run from the document alone.
inline ResultDocument rotating_disk_cell_document(const RotatingDiskCell& cell) {
  ResultDocument d;
  d.config.command = "exp rotating-disk";
  d.config.epsilon = cell.scenario.epsilon;
  d.config.tolerance = cell.scenario.tolerance;
  d.config.maxIterations = cell.scenario.maxIterations;
  d.config.seed = cell.scenario.seed;
  d.config.parameters = {{"cell", scenario_to_json(cell.scenario)}};
  d.convergence.converged = cell.otConverged && cell.gwConverged;
  d.diagnostics = {{"e_ot", cell.errorOt}, {"e_gw", cell.errorGw}, {"gw_distortion", cell.distortionGw}};
  d.extra = {{"ot_converged", cell.otConverged}, {"gw_converged", cell.gwConverged}};
  return d;
}

inline RotatingDiskScenario cell_scenario(const ResultDocument& doc) {
  const auto it = doc.config.parameters.find("cell");
  detail::require(it != doc.config.parameters.end(), "document is not a rotating-disk cell");
  return rotating_disk_scenario_from_json(*it);
}

inline Json rotating_disk_config_to_json(const RotatingDiskConfig& c) {
  return {{"n", c.n},
          {"epsilon", c.epsilon},
          {"angles", c.resolved_angles()},
          {"repetitions", c.repetitions},
          {"base_seed", c.baseSeed},
          {"noisy_magnitude", c.noisyMagnitude},
          {"sweep_angle", c.sweepAngle},
          {"sweep_magnitudes", c.resolved_magnitudes()},
          {"tolerance", c.tolerance},
          {"max_iterations", c.maxIterations}};
}

/// Mean-error table, one row per angle, preceded by a '#' config line.
inline void write_rotating_disk_table(std::ostream& out, const RotatingDiskReport& rep) {
  out << "# config " << rotating_disk_config_to_json(rep.config).dump() << '\n';
  out << "theta_deg,mean_e_ot,mean_e_gw,mean_e_ot_noisy,mean_e_gw_noisy,unconverged\n";
  out << std::setprecision(17);
  for (const auto& r : rep.rows)
    out << r.theta * 180.0 / std::numbers::pi << ',' << r.meanErrorOt << ',' << r.meanErrorGw << ','
        << r.meanErrorOtNoisy << ',' << r.meanErrorGwNoisy << ',' << r.unconverged << '\n';
}

/// Noise-sweep table at the sweep angle.
inline void write_noise_sweep_table(std::ostream& out, const RotatingDiskReport& rep) {
  out << "# config " << rotating_disk_config_to_json(rep.config).dump() << '\n';
  out << "m,mean_e_ot,mean_e_gw,unconverged\n";
  out << std::setprecision(17);
  for (const auto& r : rep.sweep)
    out << r.magnitude << ',' << r.meanErrorOt << ',' << r.meanErrorGw << ',' << r.unconverged << '\n';
}

}  // namespace gwt

#endif  // GWT_IO_HPP_
