#include "probmax/smoothing.hpp"

#include <algorithm>
#include <cmath>

#include "probmax/errors.hpp"

namespace probmax {

SmoothingParam::SmoothingParam(double s) : s_(s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("smoothing parameter s must be positive and finite");
}

double smooth_max(double u1, double u2, SmoothingParam s) {
  const double sv = s.value();
  return std::max(u1, u2) + sv * std::log1p(std::exp(-std::abs(u1 - u2) / sv));
}

SmoothMaxGradient smooth_max_grad(double u1, double u2, SmoothingParam s) {
  const double e = std::exp(-std::abs(u1 - u2) / s.value());
  const double small = e / (1.0 + e);
  const double large = 1.0 - small;
  return u1 >= u2 ? SmoothMaxGradient{large, small} : SmoothMaxGradient{small, large};
}

double smooth_abs(double u, SmoothingParam s) {
  const double sv = s.value();
  const double a = std::abs(u);
  return a + sv * std::log1p(std::exp(-2.0 * a / sv));
}

double smooth_abs_grad(double u, SmoothingParam s) { return std::tanh(u / s.value()); }

}  // namespace probmax
