#pragma once

namespace probmax {

/// Smoothing scale s > 0 of the log-sum-exp approximations below.
class SmoothingParam {
 public:
  explicit SmoothingParam(double s);
  [[nodiscard]] double value() const { return s_; }

 private:
  double s_;
};

struct SmoothMaxGradient {
  double d1 = 0.5;
  double d2 = 0.5;
};

/// s·ln(exp(u1/s) + exp(u2/s)), evaluated as max + s·log1p(exp(-|u1-u2|/s)).
/// Overestimates max{u1, u2} by at most s·ln 2.
double smooth_max(double u1, double u2, SmoothingParam s);

/// Partial derivatives of smooth_max: the softmax weights of (u1/s, u2/s).
/// They sum to 1; for |u1 - u2|/s beyond ~37 the smaller weight underflows
/// relative to 1 and the larger one rounds to exactly 1.
SmoothMaxGradient smooth_max_grad(double u1, double u2, SmoothingParam s);

/// smooth_max(u, -u, s) = |u| + s·log1p(exp(-2|u|/s)).
double smooth_abs(double u, SmoothingParam s);

/// d/du smooth_abs(u, s) = tanh(u/s).
double smooth_abs_grad(double u, SmoothingParam s);

}  // namespace probmax
