#include <cmath>
#include <numbers>

#include "doctest.h"
#include "probmax/errors.hpp"
#include "probmax/harness.hpp"
#include "probmax/integrand.hpp"
#include "probmax/oracle.hpp"

using namespace probmax;

namespace {

ProblemSpec unit_ball_spec(Eigen::Index n, double s = 0.1) {
  return ProblemSpec::create(ConvexBody::ball(n), FeasibleSet::ball(Vector::Zero(n), 2.0), 2.0, s, 0.1);
}

Vector random_vector(RandomStream& s, Eigen::Index n, double scale) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * s.normal();
  return v;
}

}  // namespace

TEST_CASE("normalization constant") {
  CHECK(normalization_constant(ConvexBody::ball(2), 2, 2.0) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-14));
  // Γ(2.5) = 3√π/4
  const double c3 = 1.0 / (4.0 * std::numbers::pi / 3.0 * 0.75 * std::sqrt(std::numbers::pi));
  CHECK(normalization_constant(ConvexBody::ball(3), 3, 2.0) == doctest::Approx(c3).epsilon(1e-14));
  CHECK(c3 == doctest::Approx(0.179587).epsilon(1e-6));
  const ConvexBody box = ConvexBody::box(Vector::Constant(3, 0.5));
  CHECK(normalization_constant(box, 3, 3.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(example1().normalization() == doctest::Approx(c3).epsilon(1e-14));
}

TEST_CASE("closed-form integrand values") {
  const ProblemSpec spec = unit_ball_spec(3);
  const double w = std::pow(2.0 * std::numbers::pi, 1.5);
  CHECK(integrand_value(Vector::Zero(3), Vector::Zero(3), spec) == doctest::Approx(w).epsilon(1e-14));
  Vector xi(3);
  xi << 1.0, -0.5, 0.25;
  // x = 0: exponent ‖ξ‖²/2 − ‖ξ‖²
  CHECK(integrand_value(Vector::Zero(3), xi, spec) == doctest::Approx(w * std::exp(-0.5 * xi.squaredNorm())));
  Vector x(3);
  x << 3.0, 0.0, 0.0;
  // |ξᵀx| = 3 dominates the gauge √1.3125
  CHECK(integrand_value(x, xi, spec) == doctest::Approx(w * std::exp(0.5 * xi.squaredNorm() - 9.0)));
  CHECK(integrand_smooth(Vector::Ones(3), Vector::Zero(3), spec) < w);
}

TEST_CASE("positivity, evenness and the smoothing sandwich") {
  const ProblemSpec spec = example1();
  RandomStream s(17);
  for (int t = 0; t < 200; ++t) {
    const Vector x = random_vector(s, 3, 1.0);
    const Vector xi = random_vector(s, 3, 1.5);
    const double f = integrand_value(x, xi, spec);
    const double fs = integrand_smooth(x, xi, spec);
    CHECK(f > 0.0);
    CHECK(fs > 0.0);
    CHECK(fs <= f);
    CHECK(integrand_value(x, -xi, spec) == f);
    CHECK(integrand_smooth(x, -xi, spec) == fs);
  }
}

TEST_CASE("smoothed integrand converges as s shrinks") {
  const ProblemSpec base = example1();
  RandomStream st(23);
  for (int t = 0; t < 1000; ++t) {
    const Vector x = random_vector(st, 3, 1.0);
    const Vector xi = random_vector(st, 3, 1.0);
    const double exact = integrand_value(x, xi, base);
    double previous = std::numeric_limits<double>::infinity();
    for (double s : {0.1, 0.01, 0.001}) {
      const double gap = std::abs(integrand_smooth(x, xi, base.with_smoothing(s)) - exact);
      CHECK(gap <= previous);
      previous = gap;
    }
    // g_s exceeds g by at most (|u| + s ln2)² − u² + s ln2 at s = 0.001
    const double u = std::abs(xi.dot(x));
    const double sl = 0.001 * std::log(2.0);
    CHECK(previous <= exact * (1.0 - std::exp(-((u + sl) * (u + sl) - u * u + sl))) * (1.0 + 1e-9));
  }
}

TEST_CASE("gradient special cases") {
  const ProblemSpec spec = example1();
  Vector xi(3);
  xi << 0.3, -0.2, 0.9;
  CHECK(integrand_smooth_grad(Vector::Zero(3), xi, spec).isZero(0.0));
  CHECK(integrand_smooth_grad(Vector::Ones(3), Vector::Zero(3), spec).isZero(0.0));
}

TEST_CASE("gradient matches central differences") {
  const ProblemSpec spec = example1();
  RandomStream s(31);
  int resolved = 0;
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_vector(s, 3, 0.7);
    const Vector xi = random_vector(s, 3, 1.0);
    const auto check = check_gradient(
        x, [&](const Vector& p) { return integrand_smooth(p, xi, spec); },
        [&](const Vector& p) { return integrand_smooth_grad(p, xi, spec); }, 1e-6);
    CHECK(check.max_scaled_error <= 1e-5);
    if (check.resolvable()) {
      ++resolved;
      CHECK(check.max_rel_error <= 1e-5);
    }
  }
  CHECK(resolved >= 5);
}

TEST_CASE("value_grad agrees with the separate functions") {
  const ProblemSpec spec = example2(5);
  RandomStream s(8);
  const Vector x = random_vector(s, 5, 1.0);
  const Vector xi = random_vector(s, 5, 1.0);
  Vector g(5);
  CHECK(integrand_smooth_value_grad(x, xi, spec, g) == integrand_smooth(x, xi, spec));
  CHECK(g == integrand_smooth_grad(x, xi, spec));
}

TEST_CASE("exponent clamp is counted") {
  const ProblemSpec wide =
      ProblemSpec::create(ConvexBody::ball(2, 100.0), FeasibleSet::ball(Vector::Zero(2), 1.0), 2.0, 0.1, 0.1);
  Vector xi(2);
  xi << 50.0, 0.0;  // ‖ξ‖²/2 = 1250, gauge² = 0.25
  IntegrandDiagnostics diag;
  const double v = integrand_value(Vector::Zero(2), xi, wide, &diag);
  CHECK(std::isfinite(v));
  CHECK(diag.clamped == 1);
  CHECK(v == doctest::Approx(std::exp(700.0)));
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(ProblemSpec::create(ConvexBody::ball(3), FeasibleSet::ball(Vector::Zero(2), 1.0)), DimensionError);
  CHECK_THROWS_AS(ProblemSpec::create(ConvexBody::ball(2), FeasibleSet::ball(Vector::Zero(2), 1.0), 1.5),
                  ValidationError);
  CHECK_THROWS_AS(ProblemSpec::create(ConvexBody::ball(2), FeasibleSet::ball(Vector::Zero(2), 1.0), 2.0, 0.1, 1.0),
                  ValidationError);
  CHECK_THROWS_AS(integrand_value(Vector::Zero(2), Vector::Zero(3), unit_ball_spec(3)), DimensionError);
}
