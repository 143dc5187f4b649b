#include "probmax/oracle.hpp"

#include <cmath>
#include <vector>

#include "probmax/errors.hpp"
#include "probmax/parallel.hpp"

namespace probmax {

namespace {

struct ChunkStats {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  Vector grad_sum;
  double grad_sq_sum = 0.0;
  std::uint64_t clamped = 0;
};

// Chan et al. pairwise combination of (count, mean, M2).
void combine(ChunkStats& into, const ChunkStats& from) {
  if (from.count == 0.0) return;
  const double total = into.count + from.count;
  const double delta = from.mean - into.mean;
  into.mean += delta * from.count / total;
  into.m2 += from.m2 + delta * delta * into.count * from.count / total;
  into.count = total;
  into.grad_sq_sum += from.grad_sq_sum;
  into.clamped += from.clamped;
  if (from.grad_sum.size() > 0) {
    if (into.grad_sum.size() == 0) into.grad_sum = from.grad_sum;
    else into.grad_sum += from.grad_sum;
  }
}

OracleSample run_batch(const VectorRef& x, std::uint64_t n_samples, RandomStream& stream, const ProblemSpec& spec,
                       IntegrandKind kind, bool with_gradient) {
  const Eigen::Index n = spec.dimension();
  if (x.size() != n) throw DimensionError("oracle x", n, x.size());
  if (n_samples < 1) throw ValidationError("oracle: batch size must be >= 1");
  if (with_gradient && kind != IntegrandKind::kSmoothed) {
    throw ValidationError("oracle: gradients are only available for the smoothed integrand");
  }

  const auto block = stream.reserve_normals(n_samples * static_cast<std::uint64_t>(n));
  const std::uint64_t n_chunks = (n_samples + kChunkSize - 1) / kChunkSize;
  std::vector<ChunkStats> chunks(n_chunks);
  const Vector xv = x;

  parallel_for(n_chunks, [&](std::size_t c) {
    ChunkStats& st = chunks[c];
    const std::uint64_t begin = c * kChunkSize;
    const std::uint64_t end = std::min(n_samples, begin + kChunkSize);
    Vector xi(n);
    Vector grad(n);
    IntegrandDiagnostics diag;
    if (with_gradient) st.grad_sum = Vector::Zero(n);
    for (std::uint64_t j = begin; j < end; ++j) {
      block.fill(j * static_cast<std::uint64_t>(n), std::span<double>(xi.data(), static_cast<std::size_t>(n)));
      double value;
      if (with_gradient) {
        value = integrand_smooth_value_grad(xv, xi, spec, grad, &diag);
        st.grad_sum += grad;
        st.grad_sq_sum += grad.squaredNorm();
      } else if (kind == IntegrandKind::kSmoothed) {
        value = integrand_smooth(xv, xi, spec, &diag);
      } else {
        value = integrand_value(xv, xi, spec, &diag);
      }
      st.count += 1.0;
      const double delta = value - st.mean;
      st.mean += delta / st.count;
      st.m2 += delta * (value - st.mean);
    }
    st.clamped = diag.clamped;
  });

  ChunkStats total;
  for (const ChunkStats& st : chunks) combine(total, st);

  const double c_norm = spec.normalization();
  const double count = static_cast<double>(n_samples);
  OracleSample out;
  out.batch_size = n_samples;
  out.samples_consumed = n_samples;
  out.clamped = total.clamped;
  out.value_mean = c_norm * total.mean;
  const double variance = n_samples > 1 ? total.m2 / (count - 1.0) : 0.0;
  out.value_se = c_norm * std::sqrt(variance / count);
  if (with_gradient) {
    const Vector raw_mean = total.grad_sum / count;
    out.grad_mean = c_norm * raw_mean;
    out.grad_noise_variance = c_norm * c_norm * std::max(0.0, total.grad_sq_sum / count - raw_mean.squaredNorm());
  } else {
    out.grad_mean = Vector::Zero(n);
  }
  return out;
}

}  // namespace

OracleSample estimate_f(const VectorRef& x, std::uint64_t n_samples, RandomStream& stream, const ProblemSpec& spec,
                        IntegrandKind kind) {
  return run_batch(x, n_samples, stream, spec, kind, false);
}

OracleSample batch_gradient(const VectorRef& x, std::uint64_t n_samples, RandomStream& stream,
                            const ProblemSpec& spec) {
  return run_batch(x, n_samples, stream, spec, IntegrandKind::kSmoothed, true);
}

SampleAverage::SampleAverage(const ProblemSpec& spec, std::uint64_t n_samples, RandomStream& stream)
    : spec_(&spec) {
  if (n_samples < 1) throw ValidationError("SampleAverage: batch size must be >= 1");
  const Eigen::Index n = spec.dimension();
  const auto count = static_cast<Eigen::Index>(n_samples);
  const auto block = stream.reserve_normals(n_samples * static_cast<std::uint64_t>(n));
  xi_.resize(n, count);
  log_base_.resize(count);
  gauge_power_.resize(count);
  block.fill(0, std::span<double>(xi_.data(), static_cast<std::size_t>(xi_.size())));
  const double m = spec.degree();
  for (Eigen::Index j = 0; j < count; ++j) {
    const auto col = xi_.col(j);
    log_base_(j) = spec.log_weight_constant() + 0.5 * col.squaredNorm();
    const double gauge = minkowski_gauge(spec.body(), col);
    gauge_power_(j) = m == 2.0 ? gauge * gauge : std::pow(gauge, m);
  }
}

OracleSample SampleAverage::evaluate(const VectorRef& x) const {
  const Eigen::Index n = spec_->dimension();
  if (x.size() != n) throw DimensionError("SampleAverage x", n, x.size());
  const Eigen::Index count = log_base_.size();
  const Vector u = xi_.transpose() * x;
  Vector du(count);
  IntegrandDiagnostics diag;
  double sum = 0.0;
  double sum_sq = 0.0;
  double grad_sq = 0.0;
  for (Eigen::Index j = 0; j < count; ++j) {
    const double v = integrand_smooth_from_parts(u(j), log_base_(j), gauge_power_(j), *spec_, du(j), &diag);
    sum += v;
    sum_sq += v * v;
    grad_sq += du(j) * du(j) * (log_base_(j) - spec_->log_weight_constant()) * 2.0;
  }
  const double c_norm = spec_->normalization();
  const double total = static_cast<double>(count);
  const double mean = sum / total;
  const Vector raw_grad = (xi_ * du) / total;
  OracleSample out;
  out.batch_size = out.samples_consumed = static_cast<std::uint64_t>(count);
  out.clamped = diag.clamped;
  out.value_mean = c_norm * mean;
  const double variance = count > 1 ? std::max(0.0, (sum_sq - total * mean * mean) / (total - 1.0)) : 0.0;
  out.value_se = c_norm * std::sqrt(variance / total);
  out.grad_mean = c_norm * raw_grad;
  out.grad_noise_variance = c_norm * c_norm * std::max(0.0, grad_sq / total - raw_grad.squaredNorm());
  return out;
}

HitOrMissEstimate hit_or_miss_probability(const VectorRef& x, std::uint64_t n_samples, RandomStream& stream,
                                          const ConvexBody& body) {
  const Eigen::Index n = body.dimension();
  if (x.size() != n) throw DimensionError("hit_or_miss_probability", n, x.size());
  if (n_samples < 1) throw ValidationError("hit_or_miss_probability: N must be >= 1");

  const RandomStream base = stream.split();
  const std::uint64_t n_chunks = (n_samples + kChunkSize - 1) / kChunkSize;
  std::vector<std::uint64_t> hits(n_chunks, 0);
  const Vector xv = x;
  parallel_for(n_chunks, [&](std::size_t c) {
    RandomStream sub = base.derive(c);
    const std::uint64_t begin = c * kChunkSize;
    const std::uint64_t end = std::min(n_samples, begin + kChunkSize);
    Vector xi(n);
    std::uint64_t local = 0;
    for (std::uint64_t j = begin; j < end; ++j) {
      sample_uniform_into(body, sub, xi);
      if (std::abs(xi.dot(xv)) <= 1.0) ++local;
    }
    hits[c] = local;
  });

  HitOrMissEstimate out;
  out.samples = n_samples;
  for (std::uint64_t h : hits) out.hits += h;
  out.estimate = static_cast<double>(out.hits) / static_cast<double>(n_samples);
  out.standard_error = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(n_samples));
  return out;
}

HitOrMissEstimate hit_or_miss_probability(const VectorRef& x, std::uint64_t n_samples, RandomStream& stream,
                                          const ProblemSpec& spec) {
  return hit_or_miss_probability(x, n_samples, stream, spec.body());
}

GradientCheckResult gradient_check(const VectorRef& x, const ProblemSpec& spec, std::uint64_t n_samples,
                                   RandomStream& stream, double step) {
  const RandomStream start = stream;
  auto value = [&](const Vector& p) {
    RandomStream s = start;
    return estimate_f(p, n_samples, s, spec).value_mean;
  };
  auto gradient = [&](const Vector& p) {
    RandomStream s = start;
    return batch_gradient(p, n_samples, s, spec).grad_mean;
  };
  GradientCheckResult result = check_gradient(Vector(x), value, gradient, step);
  stream.reserve_normals(n_samples * static_cast<std::uint64_t>(spec.dimension()));
  return result;
}

}  // namespace probmax
