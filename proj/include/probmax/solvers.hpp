#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "probmax/geometry.hpp"
#include "probmax/integrand.hpp"
#include "probmax/oracle.hpp"
#include "probmax/random.hpp"

namespace probmax {

enum class Scheme {
  kMSA,     // modified SA: one sample and one projection per step
  kAcVSSA,  // accelerated variable sample-size SA
};

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

/// Step-size, sample-size and momentum parameters of one solver run.
///
/// m-SA uses γ_k = γ₀/k and constant β; ac-VSSA uses constant η and β with
/// N_k = ⌊k^a⌋. `budget` is the total number of gradient samples M.
struct SolverSchedule {
  Scheme scheme = Scheme::kMSA;
  double gamma0 = 0.5;
  double beta = 0.01;
  double eta = 0.0;
  double a = 7.0;
  std::uint64_t budget = 10'000;
  /// Gradient Lipschitz estimate used to bound η (η ≤ 1/(2L̂)).
  std::optional<double> lipschitz;

  static SolverSchedule msa(double gamma0, double beta, std::uint64_t budget);
  static SolverSchedule ac_vssa(double eta, double beta, double a, std::uint64_t budget,
                                std::optional<double> lipschitz = std::nullopt);

  /// Throws ValidationError on: β ≤ 0 or β² > ε², γ₀ ≤ 0 (m-SA), a ≤ 3,
  /// η ≤ 0 or η > 1/(2L̂) (ac-VSSA), budget 0.
  void validate(double eps) const;

  [[nodiscard]] double gamma(std::uint64_t k) const { return gamma0 / static_cast<double>(k); }
};

struct IterateRecord {
  std::uint64_t k = 0;
  Vector x;  // point where the gradient was sampled
  Vector y;  // ac-VSSA: y_k (y_1 = x_1); empty for m-SA
  double lambda = 0.0;
  std::uint64_t batch = 0;
  std::uint64_t cumulative_samples = 0;
  std::uint64_t cumulative_projections = 0;
  double f_hat = 0.0;  // oracle value mean at x_k
};

struct IterateTrace {
  Scheme scheme = Scheme::kMSA;
  std::vector<IterateRecord> records;
  /// m-SA: v_k = 2γ_k/β per record; empty for ac-VSSA.
  std::vector<double> weights;
  /// ac-VSSA: λ_0 = 0, λ_1, …, λ_{K+1}.
  std::vector<double> lambdas;
  Vector final_iterate;  // x_{K+1} (m-SA) or y_{K+1} (ac-VSSA)
  Vector averaged;       // x̄_K (m-SA only)
  std::uint64_t samples = 0;
  std::uint64_t projections = 0;

  [[nodiscard]] std::uint64_t iterations() const { return records.size(); }
  /// The point a run reports: x̄_K for m-SA, y_{K+1} for ac-VSSA.
  [[nodiscard]] const Vector& output() const { return scheme == Scheme::kMSA ? averaged : final_iterate; }
};

/// λ_{k+1} = (1 + √(1 + 4λ_k²))/2.
double next_lambda(double lambda);

/// N_k = ⌊k^a⌋ (exact integer power when a is integral).
std::uint64_t batch_size(std::uint64_t k, double a);

/// Largest K with Σ_{k=1}^{K} ⌊k^a⌋ ≤ M.
std::uint64_t budget_iterations(double a, std::uint64_t budget);

/// Σ v_k x_k / Σ v_k over the first `count` records (all when omitted).
Vector averaged_iterate(const IterateTrace& trace, std::optional<std::size_t> count = std::nullopt);

/// x_{k+1} = Π_X(x_k + (γ_k/β)·∇ₓF(x_k, ξ_k; s)) for M steps.
IterateTrace run_msa(const GradientOracle& oracle, const FeasibleSet& set, const SolverSchedule& schedule,
                     RandomStream& stream, const Vector& start);

/// y_{k+1} = Π_X(x_k + (η/β)·F̄_k), λ-update, x_{k+1} = y_{k+1} + ((λ_k − 1)/λ_{k+1})(y_{k+1} − y_k),
/// for the K iterations the budget allows.
IterateTrace run_ac_vssa(const GradientOracle& oracle, const FeasibleSet& set, const SolverSchedule& schedule,
                         RandomStream& stream, const Vector& start);

/// Convenience overloads on the smoothed probability oracle of `spec`,
/// starting from the feasible set's interior point.
IterateTrace run_msa(const ProblemSpec& spec, const SolverSchedule& schedule, std::uint64_t seed);
IterateTrace run_ac_vssa(const ProblemSpec& spec, const SolverSchedule& schedule, std::uint64_t seed);
IterateTrace run_solver(const ProblemSpec& spec, const SolverSchedule& schedule, RandomStream& stream,
                        const Vector& start);

/// Largest sampled ‖ḡ(x) − ḡ(y)‖/‖x − y‖ over random pairs in X, where ḡ is
/// the batch gradient of f(·; s) at `batch` samples with common random
/// numbers for the two points of a pair.
double estimate_gradient_lipschitz(const ProblemSpec& spec, std::uint64_t pairs, std::uint64_t batch,
                                   RandomStream& stream);

/// Constants appearing in the ac-VSSA error bound; reported, never gated on.
struct TheoryConstants {
  double lipschitz = 0.0;       // L̂
  double diameter_bound = 0.0;  // C: bound on ‖y − x*‖ over X
  double initial_gap = 0.0;     // D̂
  double noise_variance = 0.0;  // ν̂²
  double rate_constant = 0.0;   // Ĉ
};

/// Ĉ = 2ν²η(a−2)/(a−3) + 4C²/η.
double rate_constant(double noise_variance, double eta, double a, double diameter_bound);

}  // namespace probmax
