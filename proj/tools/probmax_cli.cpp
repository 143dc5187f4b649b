// probmax: run, verify and benchmark the probability maximization solvers.
//
//   probmax bench --config configs/table1.json --out out/table1
//   probmax solve --config configs/table1.json --schedule 2
//   probmax reference --config configs/table2.json --out refs
//   probmax verify

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "probmax/errors.hpp"
#include "probmax/harness.hpp"
#include "probmax/oracle.hpp"
#include "probmax/parallel.hpp"

namespace {

using namespace probmax;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::uint64_t> replications;
};

void add_common_flags(CLI::App* cmd, Overrides& o, bool config_required) {
  auto* opt = cmd->add_option("--config", o.config, "Experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--seed", o.seed, "Override base_seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--replications", o.replications, "Override the replication count");
}

ExperimentConfig load_with_overrides(const Overrides& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) {
    cfg.base_seed = *o.seed;
    cfg.source["base_seed"] = *o.seed;
  }
  if (o.replications) {
    if (*o.replications < 1) throw ValidationError("--replications: must be >= 1");
    cfg.replications = *o.replications;
    cfg.source["replications"] = *o.replications;
  }
  if (o.out) cfg.output_dir = *o.out;
  return cfg;
}

void print_summary(const RunReport& report) {
  std::cout << "scheme        a   n  K_proj    samples  median_error  failures\n";
  for (const ScheduleSummary& s : report.summaries) {
    std::cout << std::left << std::setw(12) << s.scheme << std::right << std::setw(3)
              << (s.a ? format_double(*s.a) : "-") << std::setw(4) << s.n << std::setw(8) << s.projections
              << std::setw(11) << s.samples << "  " << std::setw(12) << format_double(s.median_error) << std::setw(10)
              << s.failures << '\n';
  }
}

int run_bench(const ExperimentConfig& cfg) {
  const RunReport report = run_experiment(cfg);
  emit_report(report, cfg.output_dir);
  print_summary(report);
  std::cout << "wrote " << (std::filesystem::path(cfg.output_dir) / "summary.csv").string() << '\n';
  return 0;
}

int run_reference(const ExperimentConfig& cfg) {
  const std::filesystem::path dir = cfg.reference.path.empty() ? cfg.output_dir : cfg.reference.path;
  std::filesystem::create_directories(dir);
  for (const ProblemConfig& p : cfg.problems) {
    const double lf = problem_gradient_lipschitz(p.spec, cfg.lipschitz);
    const Reference ref = compute_reference(p.spec, cfg.reference, lf);
    const auto path = reference_cache_path(dir, p.spec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write '" + path.string() + "'");
    out << reference_to_json(ref).dump(2) << '\n';
    std::cout << p.name << ": f* = " << format_double(ref.f_star) << " (se " << format_double(ref.f_star_se)
              << "), " << ref.steps << " steps" << (ref.converged ? "" : " (not converged)") << " -> "
              << path.string() << '\n';
  }
  return 0;
}

// Each check prints one PASS/FAIL line; the exit status is 2 if any fails.
int run_verify(std::uint64_t seed) {
  int failed = 0;
  auto report = [&](bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    if (!ok) ++failed;
  };

  {
    const ProblemSpec disk = ProblemSpec::create(ConvexBody::ball(2), FeasibleSet::ball(Vector::Zero(2), 1.0));
    RandomStream stream(seed);
    const OracleSample s = estimate_f(Vector::Zero(2), 1'000'000, stream, disk, IntegrandKind::kExact);
    const double estimate = s.value_mean * disk.body_volume().value;
    report(std::abs(estimate - M_PI) <= 0.01 * M_PI, "lasserre identity",
           "estimate " + format_double(estimate) + " vs pi");
  }

  const ProblemSpec spec = example1();
  {
    RandomStream stream(seed + 1);
    double worst = 0.0;
    double worst_scaled = 0.0;
    int resolved = 0;
    for (int t = 0; t < 20; ++t) {
      const Vector x = sample_feasible(spec.feasible(), stream);
      Vector xi(3);
      stream.fill_normal({xi.data(), 3});
      const auto check = check_gradient(
          x, [&](const Vector& p) { return integrand_smooth(p, xi, spec); },
          [&](const Vector& p) { return integrand_smooth_grad(p, xi, spec); }, 1e-6);
      worst_scaled = std::max(worst_scaled, check.max_scaled_error);
      if (check.resolvable()) {
        ++resolved;
        worst = std::max(worst, check.max_rel_error);
      }
    }
    report(worst <= 1e-5 && worst_scaled <= 1e-5, "integrand gradient",
           "max relative error " + format_double(worst) + " (" + std::to_string(resolved) +
               " resolvable points), scaled " + format_double(worst_scaled));
  }
  {
    RandomStream stream(seed + 2);
    const Vector x = sample_feasible(spec.feasible(), stream);
    const GradientCheckResult check = gradient_check(x, spec, 100'000, stream);
    report(check.max_rel_error <= 1e-3, "batch gradient", "max relative error " + format_double(check.max_rel_error));
  }
  {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uint64_t violations = 0;
    for (double s : {1e-3, 1e-1, 1.0}) {
      const SmoothingParam param(s);
      for (int i = 0; i < 10'000; ++i) {
        const double u1 = u(rng), u2 = u(rng);
        const double gap = smooth_max(u1, u2, param) - std::max(u1, u2);
        if (gap < 0.0 || gap > s * std::log(2.0) * (1.0 + 1e-12)) ++violations;
      }
    }
    report(violations == 0, "smoothing sandwich", std::to_string(violations) + " violations in 30000 draws");
  }
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probability maximization over convex sets by stochastic approximation"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  Overrides solve_opts, bench_opts, reference_opts;
  std::size_t schedule_index = 0;
  std::uint64_t verify_seed = 1;

  auto* solve = app.add_subcommand("solve", "Run one schedule of a config");
  add_common_flags(solve, solve_opts, true);
  solve->add_option("--schedule", schedule_index, "Index of the schedule to run")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Run the full experiment and write CSV/JSON reports");
  add_common_flags(bench, bench_opts, true);

  auto* verify = app.add_subcommand("verify", "Run the oracle and property self-checks");
  verify->add_option("--seed", verify_seed, "Seed for the checks")->capture_default_str();

  auto* reference = app.add_subcommand("reference", "Compute and cache reference solutions");
  add_common_flags(reference, reference_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (threads > 0) set_max_threads(static_cast<unsigned>(threads));

  try {
    if (*solve) {
      ExperimentConfig cfg = load_with_overrides(solve_opts);
      if (schedule_index >= cfg.schedules.size()) {
        throw ValidationError("--schedule: index " + std::to_string(schedule_index) + " out of range");
      }
      cfg.schedules = {cfg.schedules[schedule_index]};
      cfg.source["schedules"] = nlohmann::json::array({cfg.source["schedules"][schedule_index]});
      return run_bench(cfg);
    }
    if (*bench) return run_bench(load_with_overrides(bench_opts));
    if (*reference) return run_reference(load_with_overrides(reference_opts));
    if (*verify) return run_verify(verify_seed);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
