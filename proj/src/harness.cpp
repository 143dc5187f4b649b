#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>

#include "probmax/errors.hpp"
#include "probmax/harness.hpp"
#include "probmax/parallel.hpp"

namespace probmax {

using nlohmann::json;

namespace {

// Streams for the reference, Lipschitz estimate and error metric hang off the
// spec hash, so they do not move when base_seed changes.
constexpr std::uint64_t kLipschitzTag = 1;
constexpr std::uint64_t kReferenceTag = 2;
constexpr std::uint64_t kFinalValueTag = 3;
constexpr std::uint64_t kMetricTag = 4;
constexpr std::uint64_t kGateTag = 5;
constexpr std::uint64_t kNoiseTag = 6;

std::uint64_t hash_seed(const std::string& hash) { return std::stoull(hash, nullptr, 16); }

RandomStream spec_stream(const std::string& hash, std::uint64_t tag) {
  return RandomStream(hash_seed(hash)).derive(tag);
}

std::vector<std::uint64_t> checkpoints(std::uint64_t iterations) {
  std::vector<std::uint64_t> out;
  for (int j = 0;; ++j) {
    const auto k = static_cast<std::uint64_t>(std::llround(std::pow(10.0, j / 4.0)));
    if (k >= iterations) break;
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

SolverSchedule to_solver_schedule(const ScheduleConfig& cfg, const ProblemSpec& spec, double gradient_lipschitz) {
  const double beta = cfg.beta.value_or(spec.eps() * spec.eps());
  if (cfg.scheme == Scheme::kMSA) return SolverSchedule::msa(cfg.gamma0, beta, cfg.budget);
  // The iteration works on the β-scaled surrogate h = f/β, whose gradient is
  // L_f/β-Lipschitz.
  const double surrogate = gradient_lipschitz / beta;
  const double eta = cfg.eta.value_or(1.0 / (2.0 * surrogate));
  return SolverSchedule::ac_vssa(eta, beta, cfg.a, cfg.budget, surrogate);
}

double diameter_of(const FeasibleSet& set) {
  if (const auto* ball = std::get_if<BallSet>(&set.shape())) return 2.0 * ball->radius;
  if (set.bounds()) return (set.bounds()->second - set.bounds()->first).norm();
  return std::numeric_limits<double>::infinity();
}

double now_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

Reference obtain_reference(const ProblemConfig& problem, const ExperimentConfig& cfg) {
  const ReferenceSettings& settings = cfg.reference;
  const std::string hash = spec_hash(problem.spec);
  if (settings.mode == ReferenceSettings::Mode::kLoad) {
    if (settings.path.empty()) throw ValidationError("config reference.path: required when mode is 'load'");
    std::filesystem::path path = settings.path;
    if (std::filesystem::is_directory(path)) path = reference_cache_path(path, problem.spec);
    std::ifstream in(path);
    if (!in) throw RuntimeError("reference: cannot read '" + path.string() + "'");
    Reference ref = reference_from_json(json::parse(in));
    if (ref.hash != hash) {
      throw RuntimeError("reference: '" + path.string() + "' was computed for spec " + ref.hash + ", not " + hash);
    }
    return ref;
  }
  if (!settings.path.empty()) {
    const auto path = reference_cache_path(settings.path, problem.spec);
    if (std::filesystem::exists(path)) {
      std::ifstream in(path);
      Reference ref = reference_from_json(json::parse(in));
      if (ref.hash == hash) return ref;
    }
  }
  const double lf = problem_gradient_lipschitz(problem.spec, cfg.lipschitz);
  Reference ref = compute_reference(problem.spec, settings, lf);
  if (!settings.path.empty()) {
    std::filesystem::create_directories(settings.path);
    std::ofstream out(reference_cache_path(settings.path, problem.spec), std::ios::binary);
    out << reference_to_json(ref).dump(2) << '\n';
  }
  return ref;
}

}  // namespace

double problem_gradient_lipschitz(const ProblemSpec& spec, const LipschitzSettings& settings) {
  if (settings.value) return *settings.value;
  RandomStream stream = spec_stream(spec_hash(spec), kLipschitzTag);
  return estimate_gradient_lipschitz(spec, settings.pairs, settings.batch, stream);
}

Reference compute_reference(const ProblemSpec& spec, const ReferenceSettings& settings, double gradient_lipschitz) {
  if (!(gradient_lipschitz > 0.0)) throw ValidationError("compute_reference: Lipschitz constant must be > 0");
  Reference ref;
  ref.hash = spec_hash(spec);
  ref.gradient_lipschitz = gradient_lipschitz;
  RandomStream draws = spec_stream(ref.hash, kReferenceTag);
  const SampleAverage saa(spec, settings.batch, draws);
  const double step = 1.0 / (2.0 * gradient_lipschitz);

  Vector x = project(spec.feasible(), spec.feasible().interior_point());
  Vector best = x;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 1; k <= settings.max_steps; ++k) {
    const OracleSample g = saa.evaluate(x);
    if (g.value_mean > best_value) {
      best_value = g.value_mean;
      best = x;
    }
    Vector next = project(spec.feasible(), x + step * g.grad_mean);
    const double moved = (next - x).norm();
    x = std::move(next);
    ref.steps = k;
    if (moved <= settings.tolerance) {
      ref.converged = true;
      break;
    }
  }
  if (ref.converged) {
    ref.point = x;
  } else {
    if (saa.evaluate(x).value_mean > best_value) best = x;
    ref.point = best;
    std::cerr << "warning: reference ascent did not converge in " << settings.max_steps
              << " steps; keeping the best iterate\n";
  }
  RandomStream final_stream = spec_stream(ref.hash, kFinalValueTag);
  const HitOrMissEstimate hm = hit_or_miss_probability(ref.point, settings.final_batch, final_stream, spec);
  ref.f_star = hm.estimate;
  ref.f_star_se = hm.standard_error;
  return ref;
}

json reference_to_json(const Reference& ref) {
  return json{{"hash", ref.hash},
              {"point", std::vector<double>(ref.point.data(), ref.point.data() + ref.point.size())},
              {"f_star", ref.f_star},
              {"f_star_se", ref.f_star_se},
              {"steps", ref.steps},
              {"converged", ref.converged},
              {"gradient_lipschitz", ref.gradient_lipschitz}};
}

Reference reference_from_json(const json& doc) {
  try {
    Reference ref;
    ref.hash = doc.at("hash").get<std::string>();
    const auto point = doc.at("point").get<std::vector<double>>();
    ref.point = Eigen::Map<const Vector>(point.data(), static_cast<Eigen::Index>(point.size()));
    ref.f_star = doc.at("f_star").get<double>();
    ref.f_star_se = doc.at("f_star_se").get<double>();
    ref.steps = doc.at("steps").get<std::uint64_t>();
    ref.converged = doc.at("converged").get<bool>();
    ref.gradient_lipschitz = doc.at("gradient_lipschitz").get<double>();
    return ref;
  } catch (const json::exception& e) {
    throw RuntimeError(std::string("reference: malformed file: ") + e.what());
  }
}

std::filesystem::path reference_cache_path(const std::filesystem::path& dir, const ProblemSpec& spec) {
  return dir / ("reference-" + spec_hash(spec) + ".json");
}

ErrorMetric::ErrorMetric(const ProblemSpec& spec, const Vector& reference_point, std::uint64_t batch,
                         std::uint64_t seed)
    : body_(&spec.body()), batch_(batch), stream_(seed) {
  RandomStream s = stream_;
  const HitOrMissEstimate hm = hit_or_miss_probability(reference_point, batch_, s, *body_);
  f_ref_ = hm.estimate;
  se_ = hm.standard_error;
}

double ErrorMetric::value(const Vector& x) const {
  RandomStream s = stream_;
  return hit_or_miss_probability(x, batch_, s, *body_).estimate;
}

double ErrorMetric::error(const Vector& x) const { return f_ref_ - value(x); }

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

RunReport run_experiment(const ExperimentConfig& config) {
  if (config.replications < 1) throw ValidationError("config replications: must be >= 1");
  RunReport report;
  report.config = config.source;

  std::vector<std::unique_ptr<ErrorMetric>> metrics;
  std::vector<std::unique_ptr<ErrorMetric>> trajectory_metrics;
  std::vector<std::vector<SolverSchedule>> schedules;
  std::vector<Vector> default_starts;

  for (const ProblemConfig& problem : config.problems) {
    const ProblemSpec& spec = problem.spec;
    ProblemOutcome outcome;
    outcome.name = problem.name;
    outcome.reference = obtain_reference(problem, config);
    const double lf = config.lipschitz.value.value_or(outcome.reference.gradient_lipschitz);
    if (outcome.reference.point.size() != spec.dimension()) {
      throw RuntimeError("reference for '" + problem.name + "' has the wrong dimension");
    }

    std::vector<SolverSchedule> built;
    for (std::size_t i = 0; i < config.schedules.size(); ++i) {
      SolverSchedule s = to_solver_schedule(config.schedules[i], spec, lf);
      try {
        s.validate(spec.eps());
      } catch (const ValidationError& e) {
        throw ValidationError("config schedules[" + std::to_string(i) + "]: " + e.what());
      }
      built.push_back(s);
    }
    outcome.surrogate_lipschitz = lf / built.front().beta;

    const std::uint64_t metric_seed = spec_stream(outcome.reference.hash, kMetricTag).next_u64();
    metrics.push_back(
        std::make_unique<ErrorMetric>(spec, outcome.reference.point, config.metric.batch, metric_seed));
    trajectory_metrics.push_back(
        std::make_unique<ErrorMetric>(spec, outcome.reference.point, config.metric.trajectory_batch, metric_seed));
    outcome.metric_reference_value = metrics.back()->reference_value();
    outcome.metric_se = metrics.back()->standard_error();

    const Vector start = project(spec.feasible(), spec.feasible().interior_point());
    if (config.cross_check) {
      RandomStream gate = spec_stream(outcome.reference.hash, kGateTag);
      const OracleSample g = estimate_f(start, config.cross_check_gaussian_batch, gate, spec, IntegrandKind::kExact);
      const HitOrMissEstimate h = hit_or_miss_probability(start, config.cross_check_hit_batch, gate, spec);
      outcome.start_gaussian = g.value_mean;
      outcome.start_hit_or_miss = h.estimate;
      const double combined = std::hypot(g.value_se, h.standard_error);
      const double gap = std::abs(g.value_mean - h.estimate);
      if (gap > 4.0 * combined && gap > 1e-12) {
        throw RuntimeError("cross-oracle check failed for '" + problem.name + "': Gaussian estimate " +
                           format_double(g.value_mean) + " vs hit-or-miss " + format_double(h.estimate) + " (" +
                           format_double(gap / std::max(combined, 1e-300)) +
                           " combined SE); the reformulation or normalization is inconsistent");
      }
    }

    RandomStream noise = spec_stream(outcome.reference.hash, kNoiseTag);
    const OracleSample at_start = batch_gradient(start, config.lipschitz.batch, noise, spec);
    outcome.theory.lipschitz = outcome.surrogate_lipschitz;
    outcome.theory.diameter_bound = diameter_of(spec.feasible());
    outcome.theory.initial_gap = outcome.metric_reference_value - metrics.back()->value(start);
    outcome.theory.noise_variance = at_start.grad_noise_variance;
    for (const SolverSchedule& s : built) {
      if (s.scheme == Scheme::kAcVSSA && std::isfinite(outcome.theory.diameter_bound)) {
        outcome.theory.rate_constant = rate_constant(outcome.theory.noise_variance / (s.beta * s.beta), s.eta, s.a,
                                                     outcome.theory.diameter_bound);
        break;
      }
    }

    schedules.push_back(std::move(built));
    default_starts.push_back(start);
    report.problems.push_back(std::move(outcome));
  }

  const std::size_t n_problems = config.problems.size();
  const std::size_t n_schedules = config.schedules.size();
  const std::uint64_t reps = config.replications;
  const std::size_t total = n_problems * n_schedules * reps;
  report.cells.resize(total);
  std::vector<std::vector<TrajectoryPoint>> cell_trajectories(total);

  parallel_for(total, [&](std::size_t index) {
    const std::size_t p = index / (n_schedules * reps);
    const std::size_t s = (index / reps) % n_schedules;
    const std::uint64_t r = index % reps;
    const ProblemSpec& spec = config.problems[p].spec;
    const SolverSchedule& schedule = schedules[p][s];
    CellResult& cell = report.cells[index];
    cell.problem = p;
    cell.schedule = s;
    cell.replication = r;

    RandomStream stream = RandomStream(config.base_seed).derive(p).derive(s).derive(r);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Vector start = default_starts[p];
      if (config.random_start) {
        RandomStream start_stream = stream.split();
        start = sample_feasible(spec.feasible(), start_stream);
      }
      const IterateTrace trace = run_solver(spec, schedule, stream, start);
      cell.wall_ms = now_ms(t0);
      cell.point = trace.output();
      cell.projections = trace.projections;
      cell.samples = trace.samples;
      cell.feasible = spec.feasible().contains(cell.point, 1e-7);
      cell.f_out = metrics[p]->value(cell.point);
      cell.error = metrics[p]->reference_value() - cell.f_out;
      if (!cell.feasible) cell.status = "infeasible output";

      const ErrorMetric& tm = *trajectory_metrics[p];
      auto& traj = cell_trajectories[index];
      const std::uint64_t k_max = trace.iterations();
      if (trace.scheme == Scheme::kMSA) {
        for (std::uint64_t k : checkpoints(k_max)) {
          const Vector xbar = averaged_iterate(trace, k);
          traj.push_back({p, s, r, k, trace.records[k - 1].cumulative_samples, tm.error(xbar)});
        }
      } else {
        for (std::uint64_t k = 1; k < k_max; ++k) {
          traj.push_back({p, s, r, k, trace.records[k - 1].cumulative_samples, tm.error(trace.records[k].y)});
        }
      }
    } catch (const std::exception& e) {
      cell.wall_ms = now_ms(t0);
      cell.status = std::string("error: ") + e.what();
      cell.error = std::numeric_limits<double>::quiet_NaN();
      cell.f_out = std::numeric_limits<double>::quiet_NaN();
      cell.feasible = false;
    }
  });

  for (auto& traj : cell_trajectories) {
    report.trajectories.insert(report.trajectories.end(), traj.begin(), traj.end());
  }

  for (std::size_t p = 0; p < n_problems; ++p) {
    for (std::size_t s = 0; s < n_schedules; ++s) {
      ScheduleSummary summary;
      summary.problem = p;
      summary.schedule = s;
      const SolverSchedule& schedule = schedules[p][s];
      summary.scheme = to_string(schedule.scheme);
      if (schedule.scheme == Scheme::kAcVSSA) summary.a = schedule.a;
      summary.n = config.problems[p].spec.dimension();
      std::vector<double> errors;
      double wall = 0.0;
      for (std::uint64_t r = 0; r < reps; ++r) {
        const CellResult& cell = report.cells[(p * n_schedules + s) * reps + r];
        wall += cell.wall_ms;
        if (cell.status.rfind("error", 0) == 0) {
          ++summary.failures;
          continue;
        }
        if (errors.empty()) {
          summary.projections = cell.projections;
          summary.samples = cell.samples;
        }
        errors.push_back(cell.error);
      }
      summary.wall_ms = wall / static_cast<double>(reps);
      summary.median_error = median(errors);
      if (errors.empty()) {
        summary.mean_error = summary.se_error = std::numeric_limits<double>::quiet_NaN();
      } else {
        const double count = static_cast<double>(errors.size());
        summary.mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / count;
        double ss = 0.0;
        for (double e : errors) ss += (e - summary.mean_error) * (e - summary.mean_error);
        summary.se_error = errors.size() > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
      }
      report.summaries.push_back(summary);
    }
  }
  return report;
}

}  // namespace probmax
