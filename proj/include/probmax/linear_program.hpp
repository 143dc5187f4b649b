#pragma once

#include <Eigen/Dense>

namespace probmax {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// maximize cᵀx subject to A x ≤ b with x free.
///
/// Dense two-phase tableau simplex with Bland's rule. Intended for the small
/// problems that appear here (bounding boxes, Chebyshev centers); it makes no
/// attempt at sparsity or numerical scaling.
LpResult maximize_linear(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace probmax
