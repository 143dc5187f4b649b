#include <cmath>

#include "doctest.h"
#include "probmax/errors.hpp"
#include "probmax/harness.hpp"
#include "probmax/solvers.hpp"

using namespace probmax;

namespace {

// Deterministic oracle for f(x) = -½‖x - c‖²; ignores the stream.
class QuadraticOracle final : public GradientOracle {
 public:
  explicit QuadraticOracle(Vector c) : c_(std::move(c)) {}
  [[nodiscard]] Eigen::Index dimension() const override { return c_.size(); }
  OracleSample sample(const Vector& x, std::uint64_t n, RandomStream&) const override {
    OracleSample out;
    out.value_mean = -0.5 * (x - c_).squaredNorm();
    out.grad_mean = c_ - x;
    out.batch_size = out.samples_consumed = n;
    return out;
  }

 private:
  Vector c_;
};

class ZeroOracle final : public GradientOracle {
 public:
  explicit ZeroOracle(Eigen::Index n) : n_(n) {}
  [[nodiscard]] Eigen::Index dimension() const override { return n_; }
  OracleSample sample(const Vector&, std::uint64_t n, RandomStream& stream) const override {
    (void)stream.next_u64();
    OracleSample out;
    out.grad_mean = Vector::Zero(n_);
    out.batch_size = out.samples_consumed = n;
    return out;
  }

 private:
  Eigen::Index n_;
};

std::uint64_t brute_force_iterations(int a, std::uint64_t budget) {
  std::uint64_t used = 0, k = 0;
  for (;;) {
    std::uint64_t term = 1;
    for (int i = 0; i < a; ++i) term *= (k + 1);
    if (used + term > budget) return k;
    used += term;
    ++k;
  }
}

}  // namespace

TEST_CASE("lambda recurrence") {
  const double l1 = next_lambda(0.0);
  const double l2 = next_lambda(l1);
  const double l3 = next_lambda(l2);
  CHECK(l1 == 1.0);
  CHECK(l2 == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-15));
  // (1 + √(1 + 4·λ₂²))/2 with λ₂² = λ₂ + 1
  CHECK(l3 == doctest::Approx((1.0 + std::sqrt(5.0 + 4.0 * l2)) / 2.0).epsilon(1e-15));
  CHECK(l3 == doctest::Approx(2.193527).epsilon(1e-6));
  double lambda = 1.0;
  for (int k = 1; k <= 10'000; ++k) {
    CHECK(lambda >= (k + 1) / 2.0);
    lambda = next_lambda(lambda);
  }
}

TEST_CASE("budget rule") {
  CHECK(budget_iterations(4, 10'000) == 8);
  CHECK(budget_iterations(7, 10'000) == 3);
  CHECK(budget_iterations(5, 10'000) == 5);
  CHECK(budget_iterations(4, 1) == 1);
  for (int a = 4; a <= 8; ++a) {
    for (std::uint64_t m : {1000ull, 10'000ull, 100'000ull}) {
      CHECK(budget_iterations(a, m) == brute_force_iterations(a, m));
    }
  }
  CHECK(batch_size(3, 4) == 81);
  CHECK(batch_size(2, 4.5) == 22);
  CHECK_THROWS_AS(budget_iterations(3.0, 100), ValidationError);
}

TEST_CASE("averaging") {
  IterateTrace t;
  IterateRecord r;
  r.x = Vector::Constant(2, 3.0);
  t.records = {r, r, r};
  CHECK(averaged_iterate(t) == Vector::Constant(2, 3.0));
  IterateTrace two;
  IterateRecord a, b;
  a.x = Vector::Zero(2);
  b.x = Vector::Constant(2, 2.0);
  two.records = {a, b};
  two.weights = {0.5, 0.5};
  CHECK(averaged_iterate(two).isApprox(Vector::Ones(2)));
}

TEST_CASE("m-SA on Example 1: budget accounting and harmonic averaging") {
  const ProblemSpec spec = example1();
  const SolverSchedule sched = SolverSchedule::msa(0.5, 0.01, 2000);
  const IterateTrace trace = run_msa(spec, sched, 3);
  CHECK(trace.samples == 2000);
  CHECK(trace.projections == 2000);
  CHECK(trace.records.size() == 2000);
  Vector num = Vector::Zero(3);
  double den = 0.0;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    num += trace.records[k].x / static_cast<double>(k + 1);
    den += 1.0 / static_cast<double>(k + 1);
    CHECK(spec.feasible().contains(trace.records[k].x, 1e-9));
  }
  CHECK((trace.averaged - num / den).norm() <= 1e-12);
  CHECK(spec.feasible().contains(trace.final_iterate, 1e-9));

  const IterateTrace again = run_msa(spec, sched, 3);
  CHECK(again.averaged == trace.averaged);
  CHECK(again.final_iterate == trace.final_iterate);
}

TEST_CASE("ac-VSSA on Example 1: iterations and feasibility") {
  const ProblemSpec spec = example1();
  for (double a : {4.0, 5.0, 6.0, 7.0, 8.0}) {
    const SolverSchedule sched = SolverSchedule::ac_vssa(0.004, 0.01, a, 10'000);
    const IterateTrace trace = run_ac_vssa(spec, sched, 11);
    CHECK(trace.projections == budget_iterations(a, 10'000));
    CHECK(trace.projections <= 10);
    CHECK(trace.samples <= 10'000);
    CHECK(spec.feasible().contains(trace.final_iterate, 1e-9));
    for (const IterateRecord& r : trace.records) CHECK(spec.feasible().contains(r.y, 1e-9));
    if (trace.records.size() >= 2) CHECK(trace.records[1].x == trace.records[1].y);
  }
}

TEST_CASE("zero gradient keeps every iterate at the start") {
  const FeasibleSet X = FeasibleSet::ball(Vector::Zero(2), 1.0);
  Vector start(2);
  start << 0.3, -0.4;
  RandomStream s(1);
  const IterateTrace msa = run_msa(ZeroOracle(2), X, SolverSchedule::msa(0.5, 0.01, 50), s, start);
  for (const auto& r : msa.records) CHECK(r.x == start);
  const IterateTrace ac = run_ac_vssa(ZeroOracle(2), X, SolverSchedule::ac_vssa(0.1, 0.5, 4, 5000), s, start);
  for (const auto& r : ac.records) CHECK(r.x == start);
  CHECK(ac.final_iterate == start);
}

TEST_CASE("ac-VSSA converges on a deterministic concave quadratic") {
  Vector c(2);
  c << 3.0, 4.0;
  const FeasibleSet X = FeasibleSet::ball(Vector::Zero(2), 1.0);
  RandomStream s(1);
  // L = 1 on f; with β = 1 the surrogate is f itself and η = 1/2.
  const IterateTrace trace =
      run_ac_vssa(QuadraticOracle(c), X, SolverSchedule::ac_vssa(0.5, 1.0, 4, 1'000'000, 1.0), s, Vector::Zero(2));
  CHECK((trace.final_iterate - c / 5.0).norm() <= 1e-6);
}

TEST_CASE("schedule validation") {
  CHECK_THROWS_AS(SolverSchedule::ac_vssa(0.1, 0.01, 3.0, 100).validate(0.1), ValidationError);
  CHECK_THROWS_AS(SolverSchedule::msa(0.5, 0.2, 100).validate(0.1), ValidationError);
  CHECK_THROWS_AS(SolverSchedule::msa(0.5, 0.01, 0).validate(0.1), ValidationError);
  CHECK_THROWS_AS(SolverSchedule::ac_vssa(1.0, 0.01, 5.0, 100, 1.0).validate(0.1), ValidationError);
  CHECK_NOTHROW(SolverSchedule::ac_vssa(0.5, 0.01, 5.0, 100, 1.0).validate(0.1));
  CHECK(parse_scheme("m-SA") == Scheme::kMSA);
  CHECK(parse_scheme("ac_vssa") == Scheme::kAcVSSA);
  CHECK(to_string(Scheme::kAcVSSA) == "m-ac-VSSA");
  CHECK_THROWS_AS(parse_scheme("sgd"), ValidationError);
}

TEST_CASE("rate constant") {
  CHECK(rate_constant(2.0, 0.5, 5.0, 1.0) == doctest::Approx(2.0 * 2.0 * 0.5 * 3.0 / 2.0 + 4.0 / 0.5));
}
