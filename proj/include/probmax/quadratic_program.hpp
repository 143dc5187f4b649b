#pragma once

#include <Eigen/Dense>
#include <vector>

namespace probmax {

struct PolytopeProjection {
  Eigen::VectorXd point;
  Eigen::VectorXd multipliers;  // one per row of A; zero off the active set
  std::vector<Eigen::Index> active;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Euclidean projection of `y` onto {x : A x ≤ b}.
///
/// Goldfarb-Idnani dual active-set method with identity Hessian: start from
/// the unconstrained minimizer y, repeatedly add the most violated constraint
/// and take partial steps (dropping constraints whose multiplier would go
/// negative) until primal feasibility holds. The final active set is then
/// re-solved exactly. Throws InfeasibleError when the polytope is empty.
PolytopeProjection project_onto_polytope(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                         const Eigen::VectorXd& y);

}  // namespace probmax
