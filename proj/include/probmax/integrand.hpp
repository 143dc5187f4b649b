#pragma once

#include <cstdint>

#include "probmax/geometry.hpp"
#include "probmax/smoothing.hpp"

namespace probmax {

/// A full problem instance: maximize Prob{|ξᵀx| ≤ 1} over x ∈ X for ξ uniform
/// on the body K, with PHF degree m, smoothing scale s and the assumed lower
/// bound ε on the probability over X.
///
/// The normalization C = 1/(Vol(K)·Γ(1+n/m)) is computed once at creation.
class ProblemSpec {
 public:
  static ProblemSpec create(ConvexBody body, FeasibleSet feasible, double degree = 2.0, double smoothing = 0.1,
                            double eps = 0.1);

  [[nodiscard]] Eigen::Index dimension() const { return body_.dimension(); }
  [[nodiscard]] const ConvexBody& body() const { return body_; }
  [[nodiscard]] const FeasibleSet& feasible() const { return feasible_; }
  [[nodiscard]] double degree() const { return degree_; }
  [[nodiscard]] SmoothingParam smoothing() const { return smoothing_; }
  [[nodiscard]] double eps() const { return eps_; }
  [[nodiscard]] double normalization() const { return normalization_; }
  [[nodiscard]] const VolumeEstimate& body_volume() const { return volume_; }
  /// (n/2)·ln(2π), the log of the Gaussian importance weight's constant.
  [[nodiscard]] double log_weight_constant() const { return log_weight_constant_; }

  /// Copy with a different smoothing scale (same geometry and C).
  [[nodiscard]] ProblemSpec with_smoothing(double s) const;

 private:
  ProblemSpec(ConvexBody body, FeasibleSet feasible, double degree, SmoothingParam smoothing, double eps)
      : body_(std::move(body)), feasible_(std::move(feasible)), degree_(degree), smoothing_(smoothing), eps_(eps) {}

  ConvexBody body_;
  FeasibleSet feasible_;
  double degree_;
  SmoothingParam smoothing_;
  double eps_;
  VolumeEstimate volume_;
  double normalization_ = 0.0;
  double log_weight_constant_ = 0.0;
};

/// C = 1/(Vol(K)·Γ(1+n/m)), computed through lgamma.
double normalization_constant(const ConvexBody& body, Eigen::Index n, double degree);

/// Counts evaluations whose log-value hit the exp(700) clamp.
struct IntegrandDiagnostics {
  std::uint64_t clamped = 0;
};

inline constexpr double kLogClamp = 700.0;

/// F(x, ξ) = (2π)^{n/2} exp(‖ξ‖²/2 − max(|ξᵀx|^m, ‖ξ‖_K^m)).
double integrand_value(const VectorRef& x, const VectorRef& xi, const ProblemSpec& spec,
                       IntegrandDiagnostics* diag = nullptr);

/// F(x, ξ; s) = (2π)^{n/2} exp(‖ξ‖²/2 − g_s(ℓ_s(ξᵀx)^m, ‖ξ‖_K^m)), where g_s is
/// the smoothed max and ℓ_s the smoothed absolute value. 0 < F_s ≤ F.
double integrand_smooth(const VectorRef& x, const VectorRef& xi, const ProblemSpec& spec,
                        IntegrandDiagnostics* diag = nullptr);

/// F(x, ξ; s) from its pieces: u = ξᵀx, log_base = (n/2)ln2π + ‖ξ‖²/2 and
/// gauge_power = ‖ξ‖_K^m. Writes dF/du into `du` (so ∇ₓF = du·ξ).
double integrand_smooth_from_parts(double u, double log_base, double gauge_power, const ProblemSpec& spec,
                                   double& du, IntegrandDiagnostics* diag = nullptr);

/// ∇ₓF(x, ξ; s).
Vector integrand_smooth_grad(const VectorRef& x, const VectorRef& xi, const ProblemSpec& spec,
                             IntegrandDiagnostics* diag = nullptr);

/// Value and gradient in one pass; writes the gradient into `grad` and
/// returns F_s.
double integrand_smooth_value_grad(const VectorRef& x, const VectorRef& xi, const ProblemSpec& spec,
                                   Eigen::Ref<Eigen::VectorXd> grad, IntegrandDiagnostics* diag = nullptr);

}  // namespace probmax
