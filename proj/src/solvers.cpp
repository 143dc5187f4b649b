#include "probmax/solvers.hpp"

#include <cmath>
#include <limits>

#include "probmax/errors.hpp"

namespace probmax {

std::string to_string(Scheme scheme) { return scheme == Scheme::kMSA ? "m-SA" : "m-ac-VSSA"; }

Scheme parse_scheme(const std::string& name) {
  if (name == "m-SA" || name == "msa" || name == "MSA") return Scheme::kMSA;
  if (name == "m-ac-VSSA" || name == "ac_vssa" || name == "ac-vssa" || name == "AcVSSA") return Scheme::kAcVSSA;
  throw ValidationError("unknown scheme '" + name + "' (expected msa or ac_vssa)");
}

SolverSchedule SolverSchedule::msa(double gamma0, double beta, std::uint64_t budget) {
  SolverSchedule s;
  s.scheme = Scheme::kMSA;
  s.gamma0 = gamma0;
  s.beta = beta;
  s.budget = budget;
  return s;
}

SolverSchedule SolverSchedule::ac_vssa(double eta, double beta, double a, std::uint64_t budget,
                                       std::optional<double> lipschitz) {
  SolverSchedule s;
  s.scheme = Scheme::kAcVSSA;
  s.eta = eta;
  s.beta = beta;
  s.a = a;
  s.budget = budget;
  s.lipschitz = lipschitz;
  return s;
}

void SolverSchedule::validate(double eps) const {
  if (budget < 1) throw ValidationError("schedule: budget M must be >= 1");
  if (!(beta > 0.0)) throw ValidationError("schedule: beta must be positive");
  if (beta * beta > eps * eps) throw ValidationError("schedule: beta^2 <= eps^2 is required");
  if (scheme == Scheme::kMSA) {
    if (!(gamma0 > 0.0)) throw ValidationError("schedule: gamma0 must be positive");
    return;
  }
  if (!(a > 3.0)) throw ValidationError("schedule: ac-VSSA requires a > 3");
  if (!(eta > 0.0)) throw ValidationError("schedule: eta must be positive");
  if (lipschitz) {
    if (!(*lipschitz > 0.0)) throw ValidationError("schedule: Lipschitz estimate must be positive");
    if (eta > 1.0 / (2.0 * *lipschitz) * (1.0 + 1e-12)) {
      throw ValidationError("schedule: eta must satisfy eta <= 1/(2L)");
    }
  }
}

double next_lambda(double lambda) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * lambda * lambda)); }

std::uint64_t batch_size(std::uint64_t k, double a) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  if (a == std::floor(a) && a >= 0.0) {
    std::uint64_t result = 1;
    for (int i = 0; i < static_cast<int>(a); ++i) {
      if (k != 0 && result > kMax / k) return kMax;
      result *= k;
    }
    return result;
  }
  const double v = std::floor(std::pow(static_cast<double>(k), a));
  return v >= 1.8e19 ? kMax : static_cast<std::uint64_t>(v);
}

std::uint64_t budget_iterations(double a, std::uint64_t budget) {
  if (!(a > 3.0)) throw ValidationError("budget_iterations: a must be > 3");
  if (budget < 1) throw ValidationError("budget_iterations: M must be >= 1");
  std::uint64_t used = 0;
  std::uint64_t k = 0;
  while (true) {
    const std::uint64_t n = batch_size(k + 1, a);
    if (n > budget - used) return k;
    used += n;
    ++k;
  }
}

Vector averaged_iterate(const IterateTrace& trace, std::optional<std::size_t> count) {
  const std::size_t upto = count.value_or(trace.records.size());
  if (upto == 0 || trace.records.empty()) throw ValidationError("averaged_iterate: empty trace");
  if (upto > trace.records.size()) throw ValidationError("averaged_iterate: count exceeds trace length");
  const bool weighted = trace.weights.size() == trace.records.size();
  Vector sum = Vector::Zero(trace.records.front().x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < upto; ++i) {
    const double v = weighted ? trace.weights[i] : 1.0;
    sum += v * trace.records[i].x;
    total += v;
  }
  return sum / total;
}

IterateTrace run_msa(const GradientOracle& oracle, const FeasibleSet& set, const SolverSchedule& schedule,
                     RandomStream& stream, const Vector& start) {
  if (schedule.scheme != Scheme::kMSA) throw ValidationError("run_msa: schedule is not m-SA");
  if (start.size() != set.dimension()) throw DimensionError("run_msa start", set.dimension(), start.size());
  if (oracle.dimension() != set.dimension()) throw DimensionError("run_msa oracle", set.dimension(), oracle.dimension());

  IterateTrace trace;
  trace.scheme = Scheme::kMSA;
  trace.records.reserve(schedule.budget);
  trace.weights.reserve(schedule.budget);

  Vector x = project(set, start);
  for (std::uint64_t k = 1; k <= schedule.budget; ++k) {
    const OracleSample sample = oracle.sample(x, 1, stream);
    const double step = schedule.gamma(k) / schedule.beta;
    IterateRecord rec;
    rec.k = k;
    rec.x = x;
    rec.batch = 1;
    rec.cumulative_samples = k;
    rec.cumulative_projections = k;
    rec.f_hat = sample.value_mean;
    trace.records.push_back(std::move(rec));
    trace.weights.push_back(2.0 * step);
    x = project(set, x + step * sample.grad_mean);
  }
  trace.samples = schedule.budget;
  trace.projections = schedule.budget;
  trace.final_iterate = x;
  trace.averaged = averaged_iterate(trace);
  return trace;
}

IterateTrace run_ac_vssa(const GradientOracle& oracle, const FeasibleSet& set, const SolverSchedule& schedule,
                         RandomStream& stream, const Vector& start) {
  if (schedule.scheme != Scheme::kAcVSSA) throw ValidationError("run_ac_vssa: schedule is not ac-VSSA");
  if (!(schedule.a > 3.0)) throw ValidationError("run_ac_vssa: a must be > 3");
  if (start.size() != set.dimension()) throw DimensionError("run_ac_vssa start", set.dimension(), start.size());
  if (oracle.dimension() != set.dimension()) {
    throw DimensionError("run_ac_vssa oracle", set.dimension(), oracle.dimension());
  }

  const std::uint64_t iterations = budget_iterations(schedule.a, schedule.budget);
  const double step = schedule.eta / schedule.beta;

  IterateTrace trace;
  trace.scheme = Scheme::kAcVSSA;
  trace.lambdas.push_back(0.0);
  trace.lambdas.push_back(next_lambda(0.0));

  Vector x = project(set, start);
  Vector y = x;
  std::uint64_t used = 0;
  for (std::uint64_t k = 1; k <= iterations; ++k) {
    const std::uint64_t n_k = batch_size(k, schedule.a);
    const OracleSample sample = oracle.sample(x, n_k, stream);
    used += n_k;

    IterateRecord rec;
    rec.k = k;
    rec.x = x;
    rec.y = y;
    rec.lambda = trace.lambdas[k];
    rec.batch = n_k;
    rec.cumulative_samples = used;
    rec.cumulative_projections = k;
    rec.f_hat = sample.value_mean;
    trace.records.push_back(std::move(rec));

    const Vector y_next = project(set, x + step * sample.grad_mean);
    const double lambda_k = trace.lambdas[k];
    const double lambda_next = next_lambda(lambda_k);
    trace.lambdas.push_back(lambda_next);
    x = y_next + ((lambda_k - 1.0) / lambda_next) * (y_next - y);
    y = y_next;
  }
  trace.samples = used;
  trace.projections = iterations;
  trace.final_iterate = y;
  return trace;
}

IterateTrace run_solver(const ProblemSpec& spec, const SolverSchedule& schedule, RandomStream& stream,
                        const Vector& start) {
  schedule.validate(spec.eps());
  const SmoothedProbabilityOracle oracle(spec);
  return schedule.scheme == Scheme::kMSA ? run_msa(oracle, spec.feasible(), schedule, stream, start)
                                         : run_ac_vssa(oracle, spec.feasible(), schedule, stream, start);
}

IterateTrace run_msa(const ProblemSpec& spec, const SolverSchedule& schedule, std::uint64_t seed) {
  if (schedule.scheme != Scheme::kMSA) throw ValidationError("run_msa: schedule is not m-SA");
  RandomStream stream(seed);
  return run_solver(spec, schedule, stream, spec.feasible().interior_point());
}

IterateTrace run_ac_vssa(const ProblemSpec& spec, const SolverSchedule& schedule, std::uint64_t seed) {
  if (schedule.scheme != Scheme::kAcVSSA) throw ValidationError("run_ac_vssa: schedule is not ac-VSSA");
  RandomStream stream(seed);
  return run_solver(spec, schedule, stream, spec.feasible().interior_point());
}

double estimate_gradient_lipschitz(const ProblemSpec& spec, std::uint64_t pairs, std::uint64_t batch,
                                   RandomStream& stream) {
  if (pairs < 1 || batch < 1) throw ValidationError("estimate_gradient_lipschitz: pairs and batch must be >= 1");
  double best = 0.0;
  for (std::uint64_t i = 0; i < pairs; ++i) {
    const Vector x = sample_feasible(spec.feasible(), stream);
    const Vector y = sample_feasible(spec.feasible(), stream);
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    RandomStream crn = stream.split();
    RandomStream crn_copy = crn;
    const Vector gx = batch_gradient(x, batch, crn, spec).grad_mean;
    const Vector gy = batch_gradient(y, batch, crn_copy, spec).grad_mean;
    best = std::max(best, (gx - gy).norm() / dist);
  }
  if (!(best > 0.0)) throw RuntimeError("estimate_gradient_lipschitz: gradient appears constant on X");
  return best;
}

double rate_constant(double noise_variance, double eta, double a, double diameter_bound) {
  if (!(a > 3.0) || !(eta > 0.0)) throw ValidationError("rate_constant: requires a > 3 and eta > 0");
  return 2.0 * noise_variance * eta * (a - 2.0) / (a - 3.0) + 4.0 * diameter_bound * diameter_bound / eta;
}

}  // namespace probmax
