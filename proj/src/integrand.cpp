#include "probmax/integrand.hpp"

#include <cmath>
#include <numbers>

#include "probmax/errors.hpp"

namespace probmax {

namespace {

inline double pow_degree(double a, double m) { return m == 2.0 ? a * a : std::pow(a, m); }

inline double pow_degree_minus_one(double a, double m) { return m == 2.0 ? a : std::pow(a, m - 1.0); }

inline double clamped_exp(double log_value, IntegrandDiagnostics* diag) {
  if (log_value > kLogClamp) {
    if (diag) ++diag->clamped;
    log_value = kLogClamp;
  }
  return std::exp(log_value);
}

void check_inputs(const VectorRef& x, const VectorRef& xi, const ProblemSpec& spec) {
  if (x.size() != spec.dimension()) throw DimensionError("integrand x", spec.dimension(), x.size());
  if (xi.size() != spec.dimension()) throw DimensionError("integrand xi", spec.dimension(), xi.size());
}

}  // namespace

double normalization_constant(const ConvexBody& body, Eigen::Index n, double degree) {
  if (!(degree >= 2.0)) throw ValidationError("PHF degree m must be >= 2");
  if (n != body.dimension()) throw DimensionError("normalization_constant", body.dimension(), n);
  const double log_volume = std::log(volume(body).value);
  return std::exp(-log_volume - std::lgamma(1.0 + static_cast<double>(n) / degree));
}

ProblemSpec ProblemSpec::create(ConvexBody body, FeasibleSet feasible, double degree, double smoothing, double eps) {
  if (body.dimension() != feasible.dimension()) {
    throw DimensionError("ProblemSpec: feasible set vs body", body.dimension(), feasible.dimension());
  }
  if (!(degree >= 2.0) || !std::isfinite(degree)) throw ValidationError("ProblemSpec: PHF degree m must be >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("ProblemSpec: eps must lie in (0, 1)");
  ProblemSpec spec(std::move(body), std::move(feasible), degree, SmoothingParam(smoothing), eps);
  const double n = static_cast<double>(spec.dimension());
  spec.volume_ = volume(spec.body_);
  spec.normalization_ = std::exp(-std::log(spec.volume_.value) - std::lgamma(1.0 + n / degree));
  spec.log_weight_constant_ = 0.5 * n * std::log(2.0 * std::numbers::pi);
  return spec;
}

ProblemSpec ProblemSpec::with_smoothing(double s) const {
  ProblemSpec copy = *this;
  copy.smoothing_ = SmoothingParam(s);
  return copy;
}

double integrand_value(const VectorRef& x, const VectorRef& xi, const ProblemSpec& spec, IntegrandDiagnostics* diag) {
  check_inputs(x, xi, spec);
  const double m = spec.degree();
  const double g = std::max(pow_degree(std::abs(xi.dot(x)), m), pow_degree(minkowski_gauge(spec.body(), xi), m));
  return clamped_exp(spec.log_weight_constant() + 0.5 * xi.squaredNorm() - g, diag);
}

double integrand_smooth(const VectorRef& x, const VectorRef& xi, const ProblemSpec& spec, IntegrandDiagnostics* diag) {
  check_inputs(x, xi, spec);
  const double m = spec.degree();
  const SmoothingParam s = spec.smoothing();
  const double g = smooth_max(pow_degree(smooth_abs(xi.dot(x), s), m), pow_degree(minkowski_gauge(spec.body(), xi), m), s);
  return clamped_exp(spec.log_weight_constant() + 0.5 * xi.squaredNorm() - g, diag);
}

double integrand_smooth_from_parts(double u, double log_base, double gauge_power, const ProblemSpec& spec,
                                   double& du, IntegrandDiagnostics* diag) {
  const double m = spec.degree();
  const SmoothingParam s = spec.smoothing();
  const double ell = smooth_abs(u, s);
  const double first = pow_degree(ell, m);
  const double g = smooth_max(first, gauge_power, s);
  const double value = clamped_exp(log_base - g, diag);
  // ∂g/∂x = ∂₁g_s · m·ℓ^{m-1} · tanh(u/s) · ξ
  const double chain = smooth_max_grad(first, gauge_power, s).d1 * m * pow_degree_minus_one(ell, m) * smooth_abs_grad(u, s);
  du = -value * chain;
  return value;
}

double integrand_smooth_value_grad(const VectorRef& x, const VectorRef& xi, const ProblemSpec& spec,
                                   Eigen::Ref<Eigen::VectorXd> grad, IntegrandDiagnostics* diag) {
  check_inputs(x, xi, spec);
  if (grad.size() != spec.dimension()) throw DimensionError("integrand gradient output", spec.dimension(), grad.size());
  double du = 0.0;
  const double value = integrand_smooth_from_parts(xi.dot(x), spec.log_weight_constant() + 0.5 * xi.squaredNorm(),
                                                   pow_degree(minkowski_gauge(spec.body(), xi), spec.degree()), spec,
                                                   du, diag);
  grad = du * xi;
  return value;
}

Vector integrand_smooth_grad(const VectorRef& x, const VectorRef& xi, const ProblemSpec& spec,
                             IntegrandDiagnostics* diag) {
  Vector grad(spec.dimension());
  integrand_smooth_value_grad(x, xi, spec, grad, diag);
  return grad;
}

}  // namespace probmax
