#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "probmax/integrand.hpp"
#include "probmax/random.hpp"

namespace probmax {

/// Batches are evaluated in chunks of this many samples; chunk results are
/// reduced in chunk order, so output is bitwise reproducible for a given seed
/// regardless of how chunks are scheduled.
inline constexpr std::uint64_t kChunkSize = 1024;

enum class IntegrandKind {
  kSmoothed,  // F(x, ξ; s)
  kExact,     // F(x, ξ)
};

/// Result of one oracle call. Values and gradients are for f = C·E[F], i.e.
/// already multiplied by the normalization constant.
struct OracleSample {
  double value_mean = 0.0;
  Vector grad_mean;
  double value_se = 0.0;
  std::uint64_t batch_size = 0;
  std::uint64_t samples_consumed = 0;
  std::uint64_t clamped = 0;
  /// Empirical E‖∇ − mean‖² over the batch (per-sample gradient noise level).
  double grad_noise_variance = 0.0;
};

/// C·mean(F(x, ξ_j)) over N standard normal draws, with its standard error.
OracleSample estimate_f(const VectorRef& x, std::uint64_t n_samples, RandomStream& stream, const ProblemSpec& spec,
                        IntegrandKind kind = IntegrandKind::kSmoothed);

/// C·mean(∇ₓF(x, ξ_j; s)) and C·mean(F(x, ξ_j; s)) from the same N draws.
/// Uses exactly the draws estimate_f would use from the same stream state.
OracleSample batch_gradient(const VectorRef& x, std::uint64_t n_samples, RandomStream& stream, const ProblemSpec& spec);

struct HitOrMissEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t samples = 0;
};

/// Fraction of N uniform points of the body with |ξᵀx| ≤ 1, with binomial
/// standard error. Independent of the Gaussian reformulation. The points do
/// not depend on x, so two calls from copies of one stream share them.
HitOrMissEstimate hit_or_miss_probability(const VectorRef& x, std::uint64_t n_samples, RandomStream& stream,
                                          const ConvexBody& body);
HitOrMissEstimate hit_or_miss_probability(const VectorRef& x, std::uint64_t n_samples, RandomStream& stream,
                                          const ProblemSpec& spec);

struct GradientCheckResult {
  Vector analytic;
  Vector finite_difference;
  double max_abs_error = 0.0;
  /// max_i |analytic_i − fd_i| / ‖fd‖_∞ (0 when both sides vanish).
  double max_rel_error = 0.0;
  /// |value(x)|. Central differences carry rounding noise of order
  /// ε_mach·|value|/h, so a gradient far below the value cannot be resolved.
  double value_scale = 0.0;
  /// max_i |analytic_i − fd_i| / max(‖fd‖_∞, |value(x)|).
  double max_scaled_error = 0.0;

  /// True when ‖fd‖_∞ ≥ ratio·|value(x)|, i.e. the relative error is meaningful.
  bool resolvable(double ratio = 1e-3) const {
    return finite_difference.lpNorm<Eigen::Infinity>() >= ratio * value_scale;
  }
};

/// Compares `gradient(x)` with central differences of `value` at step h.
template <class ValueFn, class GradientFn>
GradientCheckResult check_gradient(const Vector& x, ValueFn&& value, GradientFn&& gradient, double step) {
  GradientCheckResult out;
  out.analytic = gradient(x);
  out.finite_difference.resize(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double up = value(probe);
    probe(i) = x(i) - step;
    const double down = value(probe);
    probe(i) = x(i);
    out.finite_difference(i) = (up - down) / (2.0 * step);
  }
  out.max_abs_error = (out.analytic - out.finite_difference).lpNorm<Eigen::Infinity>();
  const double scale = out.finite_difference.lpNorm<Eigen::Infinity>();
  out.max_rel_error = out.max_abs_error == 0.0 ? 0.0 : out.max_abs_error / std::max(scale, 1e-300);
  out.value_scale = std::abs(value(x));
  const double mixed = std::max(scale, out.value_scale);
  out.max_scaled_error = out.max_abs_error == 0.0 ? 0.0 : out.max_abs_error / std::max(mixed, 1e-300);
  return out;
}

/// batch_gradient versus central differences of estimate_f (smoothed), with
/// common random numbers: every evaluation starts from a copy of `stream`.
/// Advances `stream` past one batch.
GradientCheckResult gradient_check(const VectorRef& x, const ProblemSpec& spec, std::uint64_t n_samples,
                                   RandomStream& stream, double step = 1e-5);

/// f̂(x; s) = C·mean F(x, ξ_j; s) on one batch of normals drawn at construction.
///
/// Draws exactly what batch_gradient would draw from the same stream state, and
/// keeps the x-independent parts of each sample, so repeated evaluation (as in
/// a deterministic ascent on the sample average) costs two matrix-vector
/// products plus the scalar work per sample.
class SampleAverage {
 public:
  SampleAverage(const ProblemSpec& spec, std::uint64_t n_samples, RandomStream& stream);

  /// Value and gradient at x; value_se and grad_noise_variance are filled as in batch_gradient.
  [[nodiscard]] OracleSample evaluate(const VectorRef& x) const;
  [[nodiscard]] std::uint64_t size() const { return static_cast<std::uint64_t>(log_base_.size()); }

 private:
  const ProblemSpec* spec_;
  Matrix xi_;  // n × N
  Vector log_base_;
  Vector gauge_power_;
};

/// Stochastic first-order oracle consumed by the solvers.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;
  [[nodiscard]] virtual Eigen::Index dimension() const = 0;
  /// Mean gradient (and value) of the objective over a batch of `n_samples`.
  virtual OracleSample sample(const Vector& x, std::uint64_t n_samples, RandomStream& stream) const = 0;
};

/// batch_gradient of the smoothed probability f(x; s) for a ProblemSpec.
class SmoothedProbabilityOracle final : public GradientOracle {
 public:
  explicit SmoothedProbabilityOracle(const ProblemSpec& spec) : spec_(&spec) {}
  [[nodiscard]] Eigen::Index dimension() const override { return spec_->dimension(); }
  OracleSample sample(const Vector& x, std::uint64_t n_samples, RandomStream& stream) const override {
    return batch_gradient(x, n_samples, stream, *spec_);
  }

 private:
  const ProblemSpec* spec_;
};

}  // namespace probmax
