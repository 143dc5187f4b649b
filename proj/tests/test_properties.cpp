#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "probmax/errors.hpp"
#include "probmax/harness.hpp"
#include "probmax/oracle.hpp"
#include "probmax/smoothing.hpp"

using namespace probmax;

namespace {

std::vector<ConvexBody> all_bodies() {
  Vector w(3);
  w << 0.5, 1.0, 2.0;
  Matrix Q(3, 3);
  Q << 2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5;
  Matrix rows(4, 3);
  rows << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1;
  return {ConvexBody::ball(3, 1.5), ConvexBody::box(w), ConvexBody::ellipsoid(Q), ConvexBody::sym_polytope(rows)};
}

std::vector<FeasibleSet> all_sets() {
  return {example1().feasible(), FeasibleSet::ball(Vector::Constant(3, 1.2), 1.0)};
}

Vector normal_vector(RandomStream& s, Eigen::Index n, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * s.normal();
  return v;
}

}  // namespace

TEST_CASE("gauge is absolutely homogeneous and subadditive") {
  RandomStream s(1);
  for (const ConvexBody& body : all_bodies()) {
    CAPTURE(body.kind());
    for (int i = 0; i < 2000; ++i) {
      const Vector a = normal_vector(s, 3), b = normal_vector(s, 3);
      const double t = 4.0 * (s.uniform() - 0.5);
      const double ga = minkowski_gauge(body, a);
      CHECK(std::abs(minkowski_gauge(body, t * a) - std::abs(t) * ga) <= 1e-12 * std::abs(t) * ga + 1e-300);
      CHECK(minkowski_gauge(body, a + b) <= (ga + minkowski_gauge(body, b)) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("membership agrees with the gauge") {
  RandomStream s(2);
  for (const ConvexBody& body : all_bodies()) {
    CAPTURE(body.kind());
    for (int i = 0; i < 10'000; ++i) {
      const Vector p = normal_vector(s, 3, 1.0);
      CHECK(contains(body, p) == (minkowski_gauge(body, p) <= 1.0 + 1e-12));
    }
  }
}

TEST_CASE("uniform samples are symmetric about the origin") {
  RandomStream s(3);
  const int n = 100'000;
  for (const ConvexBody& body : all_bodies()) {
    CAPTURE(body.kind());
    Vector sum = Vector::Zero(3), sum_sq = Vector::Zero(3);
    for (int i = 0; i < n; ++i) {
      const Vector p = sample_uniform(body, s);
      REQUIRE(contains(body, p));
      sum += p;
      sum_sq += p.cwiseProduct(p);
    }
    const Vector mean = sum / n;
    const Vector sd = ((sum_sq / n) - mean.cwiseProduct(mean)).cwiseSqrt();
    for (int k = 0; k < 3; ++k) CHECK(std::abs(mean(k)) <= 4.0 * sd(k) / std::sqrt(n));
  }
}

TEST_CASE("square polytope volume matches 4") {
  const VolumeEstimate v = volume(ConvexBody::sym_polytope(Matrix::Identity(2, 2)));
  CHECK(std::abs(v.value - 4.0) <= 3.0 * v.standard_error);
}

TEST_CASE("projection is idempotent, feasible and non-expansive") {
  RandomStream s(4);
  for (const FeasibleSet& X : all_sets()) {
    CAPTURE(X.kind());
    for (int i = 0; i < 1000; ++i) {
      const Vector y = normal_vector(s, 3, 3.0), z = normal_vector(s, 3, 3.0);
      const Vector py = project(X, y), pz = project(X, z);
      CHECK(X.contains(py, 1e-9));
      CHECK((project(X, py) - py).norm() <= 1e-9);
      CHECK((py - pz).norm() <= (y - z).norm() * (1.0 + 1e-12) + 1e-12);
      // variational inequality against another feasible point
      CHECK((y - py).dot(pz - py) <= 1e-9 * (1.0 + (y - py).norm() * (pz - py).norm()));
    }
  }
}

TEST_CASE("smoothing sandwich for max and abs") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_real_distribution<double> logs(-6.0, 1.0);
  for (int i = 0; i < 10'000; ++i) {
    const double u1 = u(rng), u2 = u(rng);
    const SmoothingParam s(std::pow(10.0, logs(rng)));
    const double bound = s.value() * std::log(2.0);
    const double gap = smooth_max(u1, u2, s) - std::max(u1, u2);
    CHECK(gap >= 0.0);
    CHECK(gap <= bound * (1.0 + 1e-12));
    const double agap = smooth_abs(u1, s) - std::abs(u1);
    CHECK(agap >= 0.0);
    CHECK(agap <= bound * (1.0 + 1e-12));
  }
}

TEST_CASE("smooth_max_grad matches finite differences") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (double sv : {0.1, 0.5, 1.0}) {
    const SmoothingParam s(sv);
    for (int i = 0; i < 2000; ++i) {
      const double u1 = u(rng), u2 = u(rng);
      const SmoothMaxGradient g = smooth_max_grad(u1, u2, s);
      const double h1 = 1e-6 * std::max(1.0, std::abs(u1));
      const double h2 = 1e-6 * std::max(1.0, std::abs(u2));
      const double fd1 = (smooth_max(u1 + h1, u2, s) - smooth_max(u1 - h1, u2, s)) / (2 * h1);
      const double fd2 = (smooth_max(u1, u2 + h2, s) - smooth_max(u1, u2 - h2, s)) / (2 * h2);
      // weights below ~1e-3 are dominated by the O(1e-10) rounding of the quotient
      if (g.d1 > 1e-3) CHECK(std::abs(fd1 - g.d1) <= 1e-6 * g.d1);
      if (g.d2 > 1e-3) CHECK(std::abs(fd2 - g.d2) <= 1e-6 * g.d2);
      CHECK(std::abs(fd1 - g.d1) <= 1e-9);
      CHECK(std::abs(fd2 - g.d2) <= 1e-9);
    }
  }
}

TEST_CASE("smooth_max is nondecreasing in s and never overflows") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  const std::vector<double> grid = {1e-6, 1e-4, 1e-2, 0.1, 1.0, 10.0};
  for (int i = 0; i < 2000; ++i) {
    const double u1 = u(rng), u2 = u(rng);
    double previous = -std::numeric_limits<double>::infinity();
    for (double s : grid) {
      const double v = smooth_max(u1, u2, SmoothingParam(s));
      CHECK(std::isfinite(v));
      CHECK(v >= previous);
      previous = v;
      CHECK(std::isfinite(smooth_abs(u1, SmoothingParam(s))));
      CHECK(std::isfinite(smooth_abs_grad(u1, SmoothingParam(s))));
      const SmoothMaxGradient g = smooth_max_grad(u1, u2, SmoothingParam(s));
      CHECK(std::isfinite(g.d1));
      CHECK(std::isfinite(g.d2));
    }
  }
}

TEST_CASE("Lasserre identity on the unit disk") {
  const ProblemSpec disk = ProblemSpec::create(ConvexBody::ball(2), FeasibleSet::ball(Vector::Zero(2), 1.0));
  RandomStream s(8);
  const OracleSample r = estimate_f(Vector::Zero(2), 100'000, s, disk, IntegrandKind::kExact);
  CHECK(std::abs(r.value_mean - 1.0) <= 3.0 * r.value_se);
  // (1/Γ(2))∫e^{-‖ξ‖²} = π, estimated as mean F / Γ(2)
  const double integral = r.value_mean / disk.normalization();
  CHECK(std::abs(integral - std::numbers::pi) <= 3.0 * r.value_se / disk.normalization());
}

TEST_CASE("unbiasedness surrogate over 200 seeds") {
  const ProblemSpec spec = example1();
  Vector x(3);
  x << 0.9, 0.9, 0.6;
  double sum = 0.0, sum_sq = 0.0;
  const int seeds = 200;
  for (int k = 0; k < seeds; ++k) {
    RandomStream s(10'000 + k);
    const double v = estimate_f(x, 10'000, s, spec, IntegrandKind::kExact).value_mean;
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / seeds;
  const double se = std::sqrt((sum_sq / seeds - mean * mean) / (seeds - 1));
  RandomStream hs(99);
  const HitOrMissEstimate h = hit_or_miss_probability(x, 1'000'000, hs, spec);
  CHECK(std::abs(mean - h.estimate) <= 4.0 * std::hypot(se, h.standard_error));
}

TEST_CASE("second moment of the smoothed integrand stabilizes") {
  const ProblemSpec spec = example1();
  Vector x(3);
  x << 0.6, 0.7, 0.6;
  std::vector<double> variances;
  for (std::uint64_t n : {10'000ull, 100'000ull, 1'000'000ull}) {
    RandomStream s(n);
    const OracleSample r = estimate_f(x, n, s, spec);
    variances.push_back(r.value_se * r.value_se * static_cast<double>(n));
  }
  CHECK(variances[1] / variances[2] == doctest::Approx(1.0).epsilon(0.2));
  CHECK(variances[0] / variances[2] == doctest::Approx(1.0).epsilon(0.4));
}

TEST_CASE("sampled gradient Lipschitz estimate is finite and stable under doubling N") {
  const ProblemSpec spec = example1();
  RandomStream a(12), b(12);
  const double l1 = estimate_gradient_lipschitz(spec, 1000, 5000, a);
  const double l2 = estimate_gradient_lipschitz(spec, 1000, 10'000, b);
  CHECK(std::isfinite(l1));
  CHECK(l1 > 0.0);
  CHECK(l2 / l1 == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("cross-oracle gate rejects an inconsistent normalization") {
  // A square body declared with twice its true volume halves C.
  const ConvexBody wrong = ConvexBody::sym_polytope(Matrix::Identity(3, 3), 16.0);
  ExperimentConfig cfg = parse_config(nlohmann::json::parse(
      R"({"problem": "example1", "schedules": [{"scheme": "m-SA", "budget": 10}], "replications": 1,
          "reference": {"batch": 1000, "max_steps": 2, "final_batch": 1000}, "lipschitz": {"value": 1.0},
          "metric": {"batch": 1000, "trajectory_batch": 100}})"));
  cfg.problems = {{"bad-volume", ProblemSpec::create(wrong, example1().feasible())}};
  CHECK_THROWS_AS(run_experiment(cfg), RuntimeError);
  cfg.problems = {{"good-volume",
                   ProblemSpec::create(ConvexBody::sym_polytope(Matrix::Identity(3, 3), 8.0), example1().feasible())}};
  CHECK_NOTHROW(run_experiment(cfg));
}
