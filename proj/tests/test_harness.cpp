#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "probmax/errors.hpp"
#include "probmax/harness.hpp"

using namespace probmax;
using nlohmann::json;

namespace {

ExperimentConfig small_config() {
  return parse_config(json::parse(R"({
    "problem": {"builtin": "example2", "n": 4},
    "schedules": [
      {"scheme": "m-SA", "budget": 300},
      {"scheme": "m-ac-VSSA", "a": 4, "budget": 1000}
    ],
    "replications": 3,
    "base_seed": 5,
    "reference": {"batch": 20000, "max_steps": 60, "final_batch": 100000},
    "lipschitz": {"pairs": 20, "batch": 2000},
    "metric": {"batch": 100000, "trajectory_batch": 5000}
  })"));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("median and number formatting") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::isnan(median({})));
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-5) == "1e-05");
  CHECK(format_double(2.0) == "2");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("reference for a set containing the unit ball's interior is exactly optimal") {
  const ProblemSpec spec =
      ProblemSpec::create(ConvexBody::ball(3), FeasibleSet::ball(Vector::Constant(3, 0.2), 0.5), 2.0, 0.1, 0.1);
  ReferenceSettings rs;
  rs.batch = 20'000;
  rs.max_steps = 50;
  rs.final_batch = 100'000;
  const Reference ref = compute_reference(spec, rs, 1.0);
  CHECK(ref.f_star >= 1.0 - 3.0 * ref.f_star_se);
  CHECK(ref.f_star == 1.0);
  const Reference again = compute_reference(spec, rs, 1.0);
  CHECK(again.point == ref.point);
  CHECK(reference_from_json(reference_to_json(ref)).point == ref.point);
}

TEST_CASE("Example 1 reference beats random feasible points") {
  const ProblemSpec spec = example1();
  ReferenceSettings rs;
  rs.batch = 50'000;
  rs.max_steps = 60;
  rs.final_batch = 200'000;
  const Reference ref = compute_reference(spec, rs, 1.1);
  RandomStream s(3);
  for (int i = 0; i < 100; ++i) {
    const Vector x = sample_feasible(spec.feasible(), s);
    RandomStream probe(1000 + i);
    const HitOrMissEstimate h = hit_or_miss_probability(x, 20'000, probe, spec);
    CHECK(ref.f_star >= h.estimate - 3.0 * std::hypot(ref.f_star_se, h.standard_error));
  }
}

TEST_CASE("run_experiment: counts, aggregates and invariants") {
  const ExperimentConfig cfg = small_config();
  const RunReport report = run_experiment(cfg);
  REQUIRE(report.cells.size() == 6);
  REQUIRE(report.summaries.size() == 2);
  const double metric_se = report.problems.front().metric_se;
  for (const CellResult& c : report.cells) {
    CHECK(c.status == "ok");
    CHECK(c.feasible);
    CHECK(c.error >= -3.0 * std::max(metric_se, 1.0 / std::sqrt(cfg.metric.batch)));
  }
  CHECK(report.summaries[0].projections == 300);
  CHECK(report.summaries[1].projections == budget_iterations(4, 1000));

  // independent recomputation of the aggregates from the rows
  for (std::size_t s = 0; s < 2; ++s) {
    std::vector<double> errors;
    for (const CellResult& c : report.cells)
      if (c.schedule == s) errors.push_back(c.error);
    std::sort(errors.begin(), errors.end());
    CHECK(report.summaries[s].median_error == errors[1]);
    const double mean = (errors[0] + errors[1] + errors[2]) / 3.0;
    CHECK(report.summaries[s].mean_error == doctest::Approx(mean).epsilon(1e-14));
  }

  const RunReport again = run_experiment(cfg);
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    CHECK(again.cells[i].point == report.cells[i].point);
    CHECK(again.cells[i].error == report.cells[i].error);
  }
}

TEST_CASE("emit_report writes the three files") {
  ExperimentConfig cfg = small_config();
  const auto dir = std::filesystem::temp_directory_path() / "probmax_test_report";
  std::filesystem::remove_all(dir);
  const RunReport report = run_experiment(cfg);
  emit_report(report, dir);

  const auto summary = read_csv(dir / "summary.csv");
  REQUIRE(summary.size() == 3);
  CHECK(summary[0] == std::vector<std::string>{"scheme", "a", "n", "K_projections", "samples", "median_error",
                                               "mean_error", "se_error", "wall_ms"});
  CHECK(summary[1][0] == "m-SA");
  CHECK(summary[1][1].empty());
  CHECK(summary[2][1] == "4");
  CHECK(summary[2][2] == "4");

  const auto traj = read_csv(dir / "trajectories.csv");
  CHECK(traj[0][0] == "scheme");
  CHECK(traj.size() > 1);

  const json doc = json::parse(slurp(dir / "report.json"));
  CHECK(doc["config"] == cfg.source);
  CHECK(doc["cells"].size() == 6);
  CHECK(doc["problems"][0]["reference"]["hash"] == spec_hash(cfg.problems[0].spec));
  CHECK(slurp(dir / "summary.csv").find('\r') == std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("K = 1 gives a header-only trajectory") {
  ExperimentConfig cfg = small_config();
  cfg.schedules = {cfg.schedules[1]};
  cfg.schedules[0].budget = 1;
  cfg.replications = 2;
  const RunReport report = run_experiment(cfg);
  CHECK(report.summaries.front().projections == 1);
  CHECK(report.trajectories.empty());
  const auto dir = std::filesystem::temp_directory_path() / "probmax_test_k1";
  emit_report(report, dir);
  CHECK(read_csv(dir / "trajectories.csv").size() == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reference cache round trip") {
  ExperimentConfig cfg = small_config();
  const auto dir = std::filesystem::temp_directory_path() / "probmax_test_refs";
  std::filesystem::remove_all(dir);
  cfg.reference.path = dir.string();
  const RunReport first = run_experiment(cfg);
  CHECK(std::filesystem::exists(reference_cache_path(dir, cfg.problems[0].spec)));
  cfg.reference.mode = ReferenceSettings::Mode::kLoad;
  const RunReport loaded = run_experiment(cfg);
  CHECK(loaded.problems[0].reference.point == first.problems[0].reference.point);
  CHECK(loaded.cells[0].error == first.cells[0].error);

  ExperimentConfig other = cfg;
  other.problems = {{"example2_n5", example2(5)}};
  CHECK_THROWS_AS(run_experiment(other), RuntimeError);
  std::filesystem::remove_all(dir);
}
