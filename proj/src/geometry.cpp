#include "probmax/geometry.hpp"

#include <cmath>
#include <numbers>

#include "probmax/errors.hpp"
#include "probmax/linear_program.hpp"
#include "probmax/quadratic_program.hpp"

namespace probmax {

namespace {

constexpr double kMembershipTol = 1e-12;
constexpr std::uint64_t kVolumeSamples = 1'000'000;
constexpr std::uint64_t kProbeSamples = 100'000;
constexpr double kMinAcceptance = 1e-4;
constexpr std::uint64_t kInternalSeed = 0x5EEDB0D1ull;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dimension(const char* what, Eigen::Index expected, Eigen::Index actual) {
  if (expected != actual) throw DimensionError(what, expected, actual);
}

void sample_unit_ball(RandomStream& stream, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index n = out.size();
  double norm2 = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) out(i) = stream.normal();
    norm2 = out.squaredNorm();
  } while (norm2 == 0.0);
  const double radius = std::pow(stream.uniform(), 1.0 / static_cast<double>(n));
  out *= radius / std::sqrt(norm2);
}

void sample_box(const Vector& w, RandomStream& stream, Eigen::Ref<Eigen::VectorXd> out) {
  for (Eigen::Index i = 0; i < w.size(); ++i) out(i) = (2.0 * stream.uniform() - 1.0) * w(i);
}

double polytope_gauge(const Matrix& rows, const VectorRef& point) {
  return (rows * point).cwiseAbs().maxCoeff();
}

}  // namespace

// ---------------------------------------------------------------- ConvexBody

ConvexBody ConvexBody::ball(Eigen::Index dimension, double radius) {
  if (dimension < 1) throw ValidationError("ball: dimension must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ValidationError("ball: radius must be positive and finite");
  ConvexBody body(BallShape{radius}, dimension);
  body.bbox_ = Vector::Constant(dimension, radius);
  return body;
}

ConvexBody ConvexBody::box(Vector half_widths) {
  if (half_widths.size() < 1) throw ValidationError("box: dimension must be >= 1");
  if (!(half_widths.array() > 0.0).all() || !half_widths.allFinite()) {
    throw ValidationError("box: half widths must be positive and finite");
  }
  const Eigen::Index n = half_widths.size();
  ConvexBody body(BoxShape{half_widths}, n);
  body.bbox_ = half_widths;
  return body;
}

ConvexBody ConvexBody::ellipsoid(Matrix shape) {
  const Eigen::Index n = shape.rows();
  if (n < 1 || shape.cols() != n) throw ValidationError("ellipsoid: shape matrix must be square and non-empty");
  if (!shape.allFinite() || (shape - shape.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + shape.cwiseAbs().maxCoeff())) {
    throw ValidationError("ellipsoid: shape matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(shape);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw ValidationError("ellipsoid: shape matrix must be positive definite");
  }
  ConvexBody body(EllipsoidShape{shape}, n);
  const Vector inv_sqrt = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  body.ellipsoid_map_ = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  body.ellipsoid_log_det_ = eig.eigenvalues().array().log().sum();
  // Support function of {ξᵀQξ ≤ 1} along e_i is sqrt((Q⁻¹)_ii).
  const Matrix inverse = eig.eigenvectors() * inv_sqrt.cwiseAbs2().asDiagonal() * eig.eigenvectors().transpose();
  body.bbox_ = inverse.diagonal().cwiseSqrt();
  return body;
}

ConvexBody ConvexBody::sym_polytope(Matrix rows, std::optional<double> volume_override) {
  const Eigen::Index n = rows.cols();
  if (n < 1 || rows.rows() < 1) throw ValidationError("sym_polytope: need at least one row and one column");
  if (!rows.allFinite()) throw ValidationError("sym_polytope: rows must be finite");
  if (volume_override && !(*volume_override > 0.0)) {
    throw ValidationError("sym_polytope: volume override must be strictly positive");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(rows);
  if (qr.rank() < n) throw ValidationError("sym_polytope: rows must span R^n (body would be unbounded)");

  ConvexBody body(SymPolytopeShape{rows}, n);
  body.volume_override_ = volume_override;

  // Per-axis LP: max ξ_i s.t. -1 ≤ Aξ ≤ 1.
  Matrix stacked(2 * rows.rows(), n);
  stacked << rows, -rows;
  const Vector ones = Vector::Ones(2 * rows.rows());
  body.bbox_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const LpResult lp = maximize_linear(Vector::Unit(n, i), stacked, ones);
    if (lp.status != LpStatus::kOptimal) throw ValidationError("sym_polytope: body is unbounded");
    body.bbox_(i) = lp.objective;
  }

  RandomStream probe(kInternalSeed);
  Vector xi(n);
  std::uint64_t hits = 0;
  for (std::uint64_t j = 0; j < kProbeSamples; ++j) {
    sample_box(body.bbox_, probe, xi);
    if (polytope_gauge(rows, xi) <= 1.0 + kMembershipTol) ++hits;
  }
  body.acceptance_ = static_cast<double>(hits) / static_cast<double>(kProbeSamples);
  return body;
}

ConvexBody ConvexBody::with_volume_override(double volume) const {
  if (!(volume > 0.0)) throw ValidationError("volume override must be strictly positive");
  ConvexBody copy = *this;
  copy.volume_override_ = volume;
  return copy;
}

std::string ConvexBody::kind() const {
  return std::visit(Overloaded{[](const BallShape&) { return std::string("ball"); },
                               [](const BoxShape&) { return std::string("box"); },
                               [](const EllipsoidShape&) { return std::string("ellipsoid"); },
                               [](const SymPolytopeShape&) { return std::string("sym_polytope"); }},
                    shape_);
}

double minkowski_gauge(const ConvexBody& body, const VectorRef& point) {
  check_dimension("minkowski_gauge", body.dimension(), point.size());
  return std::visit(
      Overloaded{[&](const BallShape& s) { return point.norm() / s.radius; },
                 [&](const BoxShape& s) { return point.cwiseQuotient(s.half_widths).cwiseAbs().maxCoeff(); },
                 [&](const EllipsoidShape& s) { return std::sqrt(std::max(0.0, point.dot(s.shape * point))); },
                 [&](const SymPolytopeShape& s) { return polytope_gauge(s.rows, point); }},
      body.shape());
}

bool contains(const ConvexBody& body, const VectorRef& point) {
  return minkowski_gauge(body, point) <= 1.0 + kMembershipTol;
}

double log_unit_ball_volume(Eigen::Index dimension) {
  const double n = static_cast<double>(dimension);
  return 0.5 * n * std::log(std::numbers::pi) - std::lgamma(1.0 + 0.5 * n);
}

double unit_ball_volume(Eigen::Index dimension) { return std::exp(log_unit_ball_volume(dimension)); }

VolumeEstimate volume(const ConvexBody& body) {
  if (body.volume_override()) return {*body.volume_override(), 0.0};
  const Eigen::Index n = body.dimension();
  return std::visit(
      Overloaded{
          [&](const BallShape& s) {
            return VolumeEstimate{std::exp(static_cast<double>(n) * std::log(s.radius) + log_unit_ball_volume(n)), 0.0};
          },
          [&](const BoxShape& s) { return VolumeEstimate{(2.0 * s.half_widths.array()).prod(), 0.0}; },
          [&](const EllipsoidShape&) {
            return VolumeEstimate{std::exp(log_unit_ball_volume(n) - 0.5 * body.ellipsoid_log_det()), 0.0};
          },
          [&](const SymPolytopeShape& s) {
            const Vector& w = body.bounding_half_widths();
            const double box_volume = (2.0 * w.array()).prod();
            RandomStream stream(kInternalSeed + 1);
            Vector xi(n);
            std::uint64_t hits = 0;
            for (std::uint64_t j = 0; j < kVolumeSamples; ++j) {
              sample_box(w, stream, xi);
              if (polytope_gauge(s.rows, xi) <= 1.0 + kMembershipTol) ++hits;
            }
            const double p = static_cast<double>(hits) / static_cast<double>(kVolumeSamples);
            const double se = box_volume * std::sqrt(p * (1.0 - p) / static_cast<double>(kVolumeSamples));
            const double estimate = box_volume * p;
            if (hits == 0 || se > 0.01 * estimate) {
              throw RuntimeError("volume: Monte-Carlo estimate for this polytope has relative standard error above 1%; "
                                 "supply a volume override");
            }
            return VolumeEstimate{estimate, se};
          }},
      body.shape());
}

void sample_uniform_into(const ConvexBody& body, RandomStream& stream, Eigen::Ref<Eigen::VectorXd> out) {
  check_dimension("sample_uniform", body.dimension(), out.size());
  std::visit(Overloaded{[&](const BallShape& s) {
                          sample_unit_ball(stream, out);
                          out *= s.radius;
                        },
                        [&](const BoxShape& s) { sample_box(s.half_widths, stream, out); },
                        [&](const EllipsoidShape&) {
                          Vector u(body.dimension());
                          sample_unit_ball(stream, u);
                          out = body.ellipsoid_map() * u;
                        },
                        [&](const SymPolytopeShape& s) {
                          if (body.rejection_acceptance() < kMinAcceptance) {
                            throw RuntimeError("sample_uniform: rejection acceptance rate below 1e-4; body too thin");
                          }
                          do {
                            sample_box(body.bounding_half_widths(), stream, out);
                          } while (polytope_gauge(s.rows, out) > 1.0 + kMembershipTol);
                        }},
             body.shape());
}

Vector sample_uniform(const ConvexBody& body, RandomStream& stream) {
  Vector out(body.dimension());
  sample_uniform_into(body, stream, out);
  return out;
}

ConvexBody bounding_box(const ConvexBody& body) { return ConvexBody::box(body.bounding_half_widths()); }

// --------------------------------------------------------------- FeasibleSet

FeasibleSet FeasibleSet::polytope(Matrix A, Vector b) {
  const Eigen::Index n = A.cols();
  if (n < 1) throw ValidationError("polytope: dimension must be >= 1");
  if (A.rows() != b.size()) throw DimensionError("polytope: rows of A vs length of b", A.rows(), b.size());
  if (!A.allFinite() || !b.allFinite()) throw ValidationError("polytope: A and b must be finite");

  FeasibleSet set(PolytopeSet{A, b}, n);
  const Eigen::Index p = A.rows();

  // Chebyshev center: max t s.t. a_iᵀx + ‖a_i‖ t ≤ b_i.
  Matrix lifted(p, n + 1);
  for (Eigen::Index i = 0; i < p; ++i) {
    lifted.block(i, 0, 1, n) = A.row(i);
    lifted(i, n) = A.row(i).norm();
  }
  const LpResult cheb = maximize_linear(Vector::Unit(n + 1, n), lifted, b);
  if (cheb.status == LpStatus::kInfeasible || (cheb.status == LpStatus::kOptimal && cheb.objective < -1e-12)) {
    throw InfeasibleError("polytope {x : Ax <= b} is empty");
  }
  if (cheb.status == LpStatus::kOptimal) {
    set.interior_ = cheb.x.head(n);
  } else {
    set.interior_ = project_onto_polytope(A, b, Vector::Zero(n)).point;
  }

  Vector lo(n), hi(n);
  bool bounded = true;
  for (Eigen::Index i = 0; i < n && bounded; ++i) {
    const LpResult up = maximize_linear(Vector::Unit(n, i), A, b);
    const LpResult down = maximize_linear(-Vector::Unit(n, i), A, b);
    bounded = up.status == LpStatus::kOptimal && down.status == LpStatus::kOptimal;
    if (bounded) {
      hi(i) = up.objective;
      lo(i) = -down.objective;
    }
  }
  if (bounded) set.bounds_ = std::make_pair(lo, hi);
  return set;
}

FeasibleSet FeasibleSet::ball(Vector center, double radius) {
  if (center.size() < 1) throw ValidationError("ball set: dimension must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius) || !center.allFinite()) {
    throw ValidationError("ball set: radius must be positive and finite");
  }
  const Eigen::Index n = center.size();
  FeasibleSet set(BallSet{center, radius}, n);
  set.interior_ = center;
  set.bounds_ = std::make_pair(Vector(center.array() - radius), Vector(center.array() + radius));
  return set;
}

std::string FeasibleSet::kind() const {
  return std::holds_alternative<PolytopeSet>(shape_) ? "polytope" : "ball";
}

double FeasibleSet::violation(const VectorRef& x) const {
  check_dimension("FeasibleSet::violation", dimension_, x.size());
  return std::visit(Overloaded{[&](const PolytopeSet& s) {
                                 if (s.A.rows() == 0) return 0.0;
                                 return std::max(0.0, (s.A * x - s.b).maxCoeff());
                               },
                               [&](const BallSet& s) { return std::max(0.0, (x - s.center).norm() - s.radius); }},
                    shape_);
}

bool FeasibleSet::contains(const VectorRef& x, double tol) const { return violation(x) <= tol; }

Vector project(const FeasibleSet& set, const VectorRef& point) {
  check_dimension("project", set.dimension(), point.size());
  return std::visit(Overloaded{[&](const PolytopeSet& s) -> Vector {
                                 return project_onto_polytope(s.A, s.b, point).point;
                               },
                               [&](const BallSet& s) -> Vector {
                                 const Vector d = point - s.center;
                                 const double dist = d.norm();
                                 if (dist <= s.radius) return point;
                                 return s.center + (s.radius / dist) * d;
                               }},
                    set.shape());
}

Vector sample_feasible(const FeasibleSet& set, RandomStream& stream) {
  const Eigen::Index n = set.dimension();
  return std::visit(Overloaded{[&](const PolytopeSet&) -> Vector {
                                 if (!set.bounds()) throw RuntimeError("sample_feasible: polytope is unbounded");
                                 const auto& [lo, hi] = *set.bounds();
                                 Vector x(n);
                                 for (std::uint64_t attempt = 0; attempt < 100'000'000ull; ++attempt) {
                                   for (Eigen::Index i = 0; i < n; ++i) x(i) = lo(i) + (hi(i) - lo(i)) * stream.uniform();
                                   if (set.contains(x, 0.0)) return x;
                                 }
                                 throw RuntimeError("sample_feasible: rejection sampling failed");
                               },
                               [&](const BallSet& s) -> Vector {
                                 Vector u(n);
                                 sample_unit_ball(stream, u);
                                 return s.center + s.radius * u;
                               }},
                    set.shape());
}

}  // namespace probmax
