#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>

#include "probmax/random.hpp"

namespace probmax {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

struct BallShape {
  double radius = 1.0;
};
struct BoxShape {
  Vector half_widths;
};
/// {ξ : ξᵀ Q ξ ≤ 1} with Q symmetric positive definite.
struct EllipsoidShape {
  Matrix shape;
};
/// {ξ : |a_iᵀ ξ| ≤ 1 for every row a_i}.
struct SymPolytopeShape {
  Matrix rows;
};

/// Compact convex body symmetric about the origin.
///
/// Immutable once built. Factory functions validate their inputs and throw
/// ValidationError on bad parameters (non-positive radius or widths, a shape
/// matrix that is not SPD, polytope rows that do not span the space).
class ConvexBody {
 public:
  using Shape = std::variant<BallShape, BoxShape, EllipsoidShape, SymPolytopeShape>;

  static ConvexBody ball(Eigen::Index dimension, double radius = 1.0);
  static ConvexBody box(Vector half_widths);
  static ConvexBody ellipsoid(Matrix shape);
  static ConvexBody sym_polytope(Matrix rows, std::optional<double> volume_override = std::nullopt);

  [[nodiscard]] ConvexBody with_volume_override(double volume) const;

  [[nodiscard]] Eigen::Index dimension() const { return dimension_; }
  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::optional<double> volume_override() const { return volume_override_; }
  /// "ball", "box", "ellipsoid" or "sym_polytope".
  [[nodiscard]] std::string kind() const;

  /// Half widths of the smallest symmetric axis-aligned box containing the body.
  [[nodiscard]] const Vector& bounding_half_widths() const { return bbox_; }
  /// Q^{-1/2}; only meaningful for ellipsoids.
  [[nodiscard]] const Matrix& ellipsoid_map() const { return ellipsoid_map_; }
  [[nodiscard]] double ellipsoid_log_det() const { return ellipsoid_log_det_; }
  /// Acceptance rate of rejection sampling from the bounding box, from a
  /// fixed-seed 10⁵-point probe at construction (1 for non-polytopes).
  [[nodiscard]] double rejection_acceptance() const { return acceptance_; }

 private:
  ConvexBody(Shape shape, Eigen::Index dimension) : shape_(std::move(shape)), dimension_(dimension) {}

  Shape shape_;
  Eigen::Index dimension_ = 0;
  std::optional<double> volume_override_;
  Vector bbox_;
  Matrix ellipsoid_map_;
  double ellipsoid_log_det_ = 0.0;
  double acceptance_ = 1.0;
};

/// ‖ξ‖_K = inf{t > 0 : ξ/t ∈ K}.
double minkowski_gauge(const ConvexBody& body, const VectorRef& point);

bool contains(const ConvexBody& body, const VectorRef& point);

struct VolumeEstimate {
  double value = 0.0;
  double standard_error = 0.0;  // zero for closed forms and overrides
};

/// Closed form for ball, box and ellipsoid. Symmetric polytopes use the
/// override when present, otherwise a fixed-seed 10⁶-point rejection estimate
/// from the bounding box; RuntimeError if its relative standard error exceeds 1%.
VolumeEstimate volume(const ConvexBody& body);

double unit_ball_volume(Eigen::Index dimension);
double log_unit_ball_volume(Eigen::Index dimension);

/// Uniform point in the body. Throws RuntimeError for polytopes whose
/// rejection acceptance rate is below 10⁻⁴.
Vector sample_uniform(const ConvexBody& body, RandomStream& stream);
void sample_uniform_into(const ConvexBody& body, RandomStream& stream, Eigen::Ref<Eigen::VectorXd> out);

/// Smallest symmetric axis-aligned box containing the body, as a Box body.
ConvexBody bounding_box(const ConvexBody& body);

struct PolytopeSet {
  Matrix A;
  Vector b;
};
struct BallSet {
  Vector center;
  double radius = 1.0;
};

/// Closed convex feasible set X.
///
/// Polytopes {x : A x ≤ b} are certified nonempty at construction: the stored
/// interior point is the Chebyshev center when that LP is bounded, otherwise
/// the projection of the origin. An empty polytope throws InfeasibleError.
class FeasibleSet {
 public:
  using Shape = std::variant<PolytopeSet, BallSet>;

  static FeasibleSet polytope(Matrix A, Vector b);
  static FeasibleSet ball(Vector center, double radius);

  [[nodiscard]] Eigen::Index dimension() const { return dimension_; }
  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::string kind() const;
  [[nodiscard]] const Vector& interior_point() const { return interior_; }
  /// Axis-aligned bounds, when the set is bounded.
  [[nodiscard]] const std::optional<std::pair<Vector, Vector>>& bounds() const { return bounds_; }

  [[nodiscard]] bool contains(const VectorRef& x, double tol = 1e-9) const;
  /// Largest constraint violation (0 when inside).
  [[nodiscard]] double violation(const VectorRef& x) const;

 private:
  FeasibleSet(Shape shape, Eigen::Index dimension) : shape_(std::move(shape)), dimension_(dimension) {}

  Shape shape_;
  Eigen::Index dimension_ = 0;
  Vector interior_;
  std::optional<std::pair<Vector, Vector>> bounds_;
};

/// Π_X(y) = argmin_{x∈X} ‖x − y‖.
Vector project(const FeasibleSet& set, const VectorRef& point);

/// Uniform point in a bounded feasible set (rejection from its bounding box
/// for polytopes).
Vector sample_feasible(const FeasibleSet& set, RandomStream& stream);

}  // namespace probmax
