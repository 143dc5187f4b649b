#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "probmax/integrand.hpp"
#include "probmax/solvers.hpp"

namespace probmax {

// ------------------------------------------------------------------ config

struct ProblemConfig {
  std::string name;
  ProblemSpec spec;
};

struct ScheduleConfig {
  Scheme scheme = Scheme::kMSA;
  double gamma0 = 0.5;
  std::optional<double> beta;  // default ε²
  std::optional<double> eta;   // default 1/(2L̂)
  double a = 7.0;
  std::uint64_t budget = 10'000;
};

struct ReferenceSettings {
  enum class Mode { kCompute, kLoad };
  Mode mode = Mode::kCompute;
  std::string path;  // load: file, or directory searched by spec hash
  std::uint64_t batch = 1'000'000;
  std::uint64_t max_steps = 500;
  double tolerance = 1e-6;
  std::uint64_t final_batch = 10'000'000;
};

struct LipschitzSettings {
  std::optional<double> value;  // skip estimation when given (gradient of f, unscaled)
  std::uint64_t pairs = 1000;
  std::uint64_t batch = 10'000;
};

struct MetricSettings {
  std::uint64_t batch = 1'000'000;
  std::uint64_t trajectory_batch = 100'000;
};

struct ExperimentConfig {
  std::vector<ProblemConfig> problems;
  std::vector<ScheduleConfig> schedules;
  std::uint64_t replications = 20;
  std::uint64_t base_seed = 0;
  ReferenceSettings reference;
  LipschitzSettings lipschitz;
  MetricSettings metric;
  bool random_start = false;
  bool cross_check = true;
  std::uint64_t cross_check_gaussian_batch = 100'000;
  std::uint64_t cross_check_hit_batch = 1'000'000;
  std::string output_dir = "out";
  nlohmann::json source;
};

/// Parses and validates a config document. Validation failures throw
/// ValidationError naming the offending field (e.g. "schedules[1].a").
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads a config file. JSON syntax errors are reported with line and column.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Built-in problems: "example1" and "example2_n4" … "example2_n8".
std::vector<ProblemConfig> builtin_examples();
ProblemConfig builtin_problem(const std::string& name);
ProblemSpec example1(double degree = 2.0, double smoothing = 0.1, double eps = 0.1);
ProblemSpec example2(Eigen::Index n, double degree = 2.0, double smoothing = 0.1, double eps = 0.1);

/// Canonical JSON for a problem instance; key of the reference cache.
nlohmann::json problem_to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const nlohmann::json& doc, const std::string& where = "problem");
/// 16 hex digits of FNV-1a over the canonical JSON.
std::string spec_hash(const ProblemSpec& spec);

// --------------------------------------------------------------- reference

struct Reference {
  Vector point;
  double f_star = 0.0;      // hit-or-miss at final_batch
  double f_star_se = 0.0;
  std::uint64_t steps = 0;
  bool converged = false;
  double gradient_lipschitz = 0.0;  // L_f used for the step 1/(2L_f)
  std::string hash;
};

/// Sampled Lipschitz constant of ∇f(·; s), deterministic given the spec.
double problem_gradient_lipschitz(const ProblemSpec& spec, const LipschitzSettings& settings);

/// Projected gradient ascent on the sample-average f̂(·; s) built from one
/// fixed-seed batch, with step 1/(2L_f), until the step moves less than the
/// tolerance or max_steps is reached (warning on stderr, best iterate kept).
Reference compute_reference(const ProblemSpec& spec, const ReferenceSettings& settings, double gradient_lipschitz);

nlohmann::json reference_to_json(const Reference& ref);
Reference reference_from_json(const nlohmann::json& doc);
std::filesystem::path reference_cache_path(const std::filesystem::path& dir, const ProblemSpec& spec);

// ------------------------------------------------------------------ report

/// Optimality gap of a point measured by the hit-or-miss oracle against the
/// reference, on one fixed set of uniform points (common random numbers).
class ErrorMetric {
 public:
  ErrorMetric(const ProblemSpec& spec, const Vector& reference_point, std::uint64_t batch, std::uint64_t seed);
  [[nodiscard]] double error(const Vector& x) const;
  [[nodiscard]] double reference_value() const { return f_ref_; }
  [[nodiscard]] double standard_error() const { return se_; }
  [[nodiscard]] double value(const Vector& x) const;

 private:
  const ConvexBody* body_;
  std::uint64_t batch_;
  RandomStream stream_;
  double f_ref_ = 0.0;
  double se_ = 0.0;
};

struct CellResult {
  std::size_t problem = 0;
  std::size_t schedule = 0;
  std::uint64_t replication = 0;
  Vector point;
  std::uint64_t projections = 0;
  std::uint64_t samples = 0;
  double error = 0.0;
  double f_out = 0.0;
  double wall_ms = 0.0;
  bool feasible = true;
  std::string status = "ok";
};

struct TrajectoryPoint {
  std::size_t problem = 0;
  std::size_t schedule = 0;
  std::uint64_t replication = 0;
  std::uint64_t iteration = 0;
  std::uint64_t samples_so_far = 0;
  double error = 0.0;
};

struct ScheduleSummary {
  std::size_t problem = 0;
  std::size_t schedule = 0;
  std::string scheme;
  std::optional<double> a;
  Eigen::Index n = 0;
  std::uint64_t projections = 0;
  std::uint64_t samples = 0;
  double median_error = 0.0;
  double mean_error = 0.0;
  double se_error = 0.0;
  double wall_ms = 0.0;
  std::uint64_t failures = 0;
};

struct ProblemOutcome {
  std::string name;
  Reference reference;
  double surrogate_lipschitz = 0.0;  // L̂ = L_f/β for the first schedule's β
  double metric_reference_value = 0.0;
  double metric_se = 0.0;
  double start_gaussian = 0.0;
  double start_hit_or_miss = 0.0;
  TheoryConstants theory;
};

struct RunReport {
  nlohmann::json config;
  std::vector<ProblemOutcome> problems;
  std::vector<CellResult> cells;
  std::vector<ScheduleSummary> summaries;
  std::vector<TrajectoryPoint> trajectories;
};

/// Obtains references, runs every (problem, schedule, replication) cell and
/// aggregates. Replications run concurrently; results are keyed by index.
RunReport run_experiment(const ExperimentConfig& config);

/// The document written to report.json: config echo, per-problem reference
/// metadata, summaries and cells (non-finite numbers become null).
nlohmann::json report_to_json(const RunReport& report);

/// Writes summary.csv, trajectories.csv and report.json into `out_dir`.
void emit_report(const RunReport& report, const std::filesystem::path& out_dir);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Median of a copy of `values` (mean of the two middle values for even sizes).
double median(std::vector<double> values);

}  // namespace probmax
