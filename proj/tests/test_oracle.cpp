#include <cmath>
#include <cstring>

#include "doctest.h"
#include "probmax/harness.hpp"
#include "probmax/oracle.hpp"
#include "probmax/parallel.hpp"

using namespace probmax;

namespace {

ProblemSpec ball_spec(Eigen::Index n) {
  return ProblemSpec::create(ConvexBody::ball(n), FeasibleSet::ball(Vector::Zero(n), 3.0));
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("Gaussian identity at the origin") {
  const ProblemSpec spec = ball_spec(3);
  RandomStream s(101);
  const OracleSample r = estimate_f(Vector::Zero(3), 100'000, s, spec, IntegrandKind::kExact);
  CHECK(std::abs(r.value_mean - 1.0) <= 3.0 * r.value_se);
  CHECK(r.samples_consumed == 100'000);
}

TEST_CASE("Cauchy-Schwarz case: f = 1 inside the unit ball") {
  const ProblemSpec spec = ball_spec(3);
  RandomStream s(5);
  for (int t = 0; t < 10; ++t) {
    Vector x = vec3(s.normal(), s.normal(), s.normal());
    x *= s.uniform() / x.norm();
    const OracleSample r = estimate_f(x, 100'000, s, spec, IntegrandKind::kExact);
    CHECK(std::abs(r.value_mean - 1.0) <= 3.0 * r.value_se);
    const HitOrMissEstimate h = hit_or_miss_probability(x, 10'000, s, spec);
    CHECK(h.estimate == 1.0);
    CHECK(h.standard_error == 0.0);
  }
}

TEST_CASE("spherical cap value 11/16 from both oracles") {
  const ProblemSpec spec = ball_spec(3);
  const Vector x = vec3(2.0, 0.0, 0.0);
  RandomStream s(77);
  const HitOrMissEstimate h = hit_or_miss_probability(x, 100'000, s, spec);
  CHECK(std::abs(h.estimate - 11.0 / 16.0) <= 3.0 * h.standard_error);
  const OracleSample g = estimate_f(x, 100'000, s, spec, IntegrandKind::kExact);
  CHECK(std::abs(g.value_mean - 11.0 / 16.0) <= 3.0 * g.value_se);
}

TEST_CASE("hit-or-miss at the origin is exactly one") {
  RandomStream s(1);
  const HitOrMissEstimate h = hit_or_miss_probability(Vector::Zero(4), 5000, s, ConvexBody::ball(4));
  CHECK(h.estimate == 1.0);
  CHECK(h.standard_error == 0.0);
  CHECK(h.hits == 5000);
}

TEST_CASE("determinism and thread-count independence") {
  const ProblemSpec spec = example1();
  const Vector x = vec3(0.4, 0.6, 0.3);
  RandomStream a(9), b(9);
  const OracleSample ra = batch_gradient(x, 50'000, a, spec);
  const OracleSample rb = batch_gradient(x, 50'000, b, spec);
  CHECK(same_bits(ra.value_mean, rb.value_mean));
  CHECK(ra.grad_mean == rb.grad_mean);

  const unsigned saved = max_threads();
  set_max_threads(1);
  RandomStream c(9);
  const OracleSample rc = batch_gradient(x, 50'000, c, spec);
  set_max_threads(4);
  RandomStream d(9);
  const OracleSample rd = batch_gradient(x, 50'000, d, spec);
  set_max_threads(saved);
  CHECK(same_bits(rc.value_mean, ra.value_mean));
  CHECK(same_bits(rd.value_mean, ra.value_mean));
  CHECK(rc.grad_mean == rd.grad_mean);
}

TEST_CASE("batch gradient shares draws with estimate_f") {
  const ProblemSpec spec = example1();
  const Vector x = vec3(0.3, 0.5, 0.2);
  RandomStream a(4), b(4);
  CHECK(same_bits(batch_gradient(x, 3000, a, spec).value_mean, estimate_f(x, 3000, b, spec).value_mean));
  CHECK(a.position() == b.position());
}

TEST_CASE("batch gradient edge cases") {
  const ProblemSpec spec = example1();
  RandomStream s(12);
  CHECK(batch_gradient(Vector::Zero(3), 1000, s, spec).grad_mean.isZero(0.0));

  RandomStream one(13);
  RandomStream replay = one;
  const Vector x = vec3(0.7, 0.1, 0.4);
  const OracleSample r = batch_gradient(x, 1, one, spec);
  Vector xi(3);
  replay.fill_normal({xi.data(), 3});
  CHECK((r.grad_mean - spec.normalization() * integrand_smooth_grad(x, xi, spec)).norm() <= 1e-15);
}

TEST_CASE("batch mean variance scales like 1/N") {
  const ProblemSpec spec = example1();
  const Vector x = vec3(0.5, 0.5, 0.5);
  auto spread = [&](std::uint64_t n, std::uint64_t seed) {
    RandomStream s(seed);
    Vector sum = Vector::Zero(3), sum_sq = Vector::Zero(3);
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
      const Vector g = batch_gradient(x, n, s, spec).grad_mean;
      sum += g;
      sum_sq += g.cwiseProduct(g);
    }
    return Vector((sum_sq - sum.cwiseProduct(sum) / reps) / (reps - 1));
  };
  const Vector small = spread(1000, 1);
  const Vector large = spread(10'000, 2);
  for (int i = 0; i < 3; ++i) {
    const double ratio = large(i) / small(i);
    CHECK(ratio >= 0.1 / 1.5);
    CHECK(ratio <= 0.1 * 1.5);
  }
}

TEST_CASE("gradient check on a known quadratic") {
  Vector c(3);
  c << 1.0, -2.0, 0.5;
  const auto r = check_gradient(
      vec3(0.2, 0.3, -0.1), [&](const Vector& x) { return -0.5 * (x - c).squaredNorm(); },
      [&](const Vector& x) { return Vector(c - x); }, 1e-5);
  CHECK(r.max_abs_error <= 1e-7);
}

TEST_CASE("gradient check with common random numbers") {
  const ProblemSpec spec = example1();
  RandomStream s(55);
  const GradientCheckResult zero = gradient_check(Vector::Zero(3), spec, 100'000, s);
  CHECK(zero.max_abs_error <= 1e-8);
  for (int t = 0; t < 3; ++t) {
    const Vector x = sample_feasible(spec.feasible(), s);
    CHECK(gradient_check(x, spec, 100'000, s).max_rel_error <= 1e-3);
  }
}

TEST_CASE("sample average matches the batch gradient") {
  const ProblemSpec spec = example2(4);
  RandomStream a(21), b(21);
  const SampleAverage saa(spec, 20'000, a);
  Vector x(4);
  x << 0.6, 0.8, 0.7, 0.9;
  const OracleSample direct = batch_gradient(x, 20'000, b, spec);
  const OracleSample cached = saa.evaluate(x);
  CHECK(cached.value_mean == doctest::Approx(direct.value_mean).epsilon(1e-12));
  CHECK((cached.grad_mean - direct.grad_mean).norm() <= 1e-12 * direct.grad_mean.norm());
  CHECK(cached.value_se == doctest::Approx(direct.value_se).epsilon(1e-6));
  CHECK(a.position() == b.position());
}

TEST_CASE("oracle argument validation") {
  const ProblemSpec spec = example1();
  RandomStream s(0);
  CHECK_THROWS(estimate_f(Vector::Zero(2), 10, s, spec));
  CHECK_THROWS(estimate_f(Vector::Zero(3), 0, s, spec));
}
