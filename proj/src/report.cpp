#include <charconv>
#include <cmath>
#include <fstream>

#include "probmax/errors.hpp"
#include "probmax/harness.hpp"

namespace probmax {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v(i)));
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot write '" + path.string() + "'");
  return out;
}

std::string a_column(const std::optional<double>& a) { return a ? format_double(*a) : ""; }

}  // namespace

json report_to_json(const RunReport& report) {
  json doc;
  doc["config"] = report.config;
  json problems = json::array();
  for (const ProblemOutcome& p : report.problems) {
    problems.push_back({{"name", p.name},
                        {"reference",
                         {{"hash", p.reference.hash},
                          {"point", vector_json(p.reference.point)},
                          {"f_star", number_or_null(p.reference.f_star)},
                          {"f_star_se", number_or_null(p.reference.f_star_se)},
                          {"steps", p.reference.steps},
                          {"converged", p.reference.converged},
                          {"gradient_lipschitz", number_or_null(p.reference.gradient_lipschitz)}}},
                        {"surrogate_lipschitz", number_or_null(p.surrogate_lipschitz)},
                        {"metric_reference_value", number_or_null(p.metric_reference_value)},
                        {"metric_se", number_or_null(p.metric_se)},
                        {"start_gaussian", number_or_null(p.start_gaussian)},
                        {"start_hit_or_miss", number_or_null(p.start_hit_or_miss)},
                        {"theory",
                         {{"lipschitz", number_or_null(p.theory.lipschitz)},
                          {"diameter_bound", number_or_null(p.theory.diameter_bound)},
                          {"initial_gap", number_or_null(p.theory.initial_gap)},
                          {"noise_variance", number_or_null(p.theory.noise_variance)},
                          {"rate_constant", number_or_null(p.theory.rate_constant)}}}});
  }
  doc["problems"] = problems;

  json summaries = json::array();
  for (const ScheduleSummary& s : report.summaries) {
    summaries.push_back({{"problem", s.problem},
                         {"schedule", s.schedule},
                         {"scheme", s.scheme},
                         {"a", s.a ? json(*s.a) : json(nullptr)},
                         {"n", s.n},
                         {"K_projections", s.projections},
                         {"samples", s.samples},
                         {"median_error", number_or_null(s.median_error)},
                         {"mean_error", number_or_null(s.mean_error)},
                         {"se_error", number_or_null(s.se_error)},
                         {"failures", s.failures},
                         {"wall_ms", number_or_null(s.wall_ms)}});
  }
  doc["summaries"] = summaries;

  json cells = json::array();
  for (const CellResult& c : report.cells) {
    cells.push_back({{"problem", c.problem},
                     {"schedule", c.schedule},
                     {"replication", c.replication},
                     {"point", vector_json(c.point)},
                     {"K_projections", c.projections},
                     {"samples", c.samples},
                     {"error", number_or_null(c.error)},
                     {"f_out", number_or_null(c.f_out)},
                     {"feasible", c.feasible},
                     {"status", c.status},
                     {"wall_ms", number_or_null(c.wall_ms)}});
  }
  doc["cells"] = cells;

  return doc;
}

void emit_report(const RunReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw RuntimeError("cannot create '" + out_dir.string() + "': " + ec.message());

  {
    auto out = open_output(out_dir / "summary.csv");
    out << "scheme,a,n,K_projections,samples,median_error,mean_error,se_error,wall_ms\n";
    for (const ScheduleSummary& s : report.summaries) {
      out << s.scheme << ',' << a_column(s.a) << ',' << s.n << ',' << s.projections << ',' << s.samples << ','
          << format_double(s.median_error) << ',' << format_double(s.mean_error) << ','
          << format_double(s.se_error) << ',' << format_double(s.wall_ms) << '\n';
    }
  }

  {
    auto out = open_output(out_dir / "trajectories.csv");
    out << "scheme,replication,iteration,samples_so_far,error,a,n\n";
    for (const TrajectoryPoint& t : report.trajectories) {
      const ScheduleSummary& s = report.summaries.at(t.problem * (report.summaries.size() / report.problems.size()) +
                                                     t.schedule);
      out << s.scheme << ',' << t.replication << ',' << t.iteration << ',' << t.samples_so_far << ','
          << format_double(t.error) << ',' << a_column(s.a) << ',' << s.n << '\n';
    }
  }

  auto out = open_output(out_dir / "report.json");
  out << report_to_json(report).dump(2) << '\n';
}

}  // namespace probmax
