#include "probmax/quadratic_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "probmax/errors.hpp"

namespace probmax {

namespace {

constexpr double kViolationTol = 1e-12;
constexpr int kMaxIterations = 10000;

struct ActiveSolve {
  Eigen::VectorXd r;  // N⁺ a
  Eigen::VectorXd z;  // primal direction N r - a
};

ActiveSolve solve_direction(const Eigen::MatrixXd& N, const Eigen::VectorXd& a) {
  ActiveSolve s;
  if (N.cols() == 0) {
    s.r.resize(0);
    s.z = -a;
    return s;
  }
  s.r = N.colPivHouseholderQr().solve(a);
  s.z = N * s.r - a;
  return s;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& A, const std::vector<Eigen::Index>& active) {
  Eigen::MatrixXd N(A.cols(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t j = 0; j < active.size(); ++j) N.col(static_cast<Eigen::Index>(j)) = A.row(active[j]).transpose();
  return N;
}

}  // namespace

PolytopeProjection project_onto_polytope(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                         const Eigen::VectorXd& y) {
  const Eigen::Index n = A.cols();
  const Eigen::Index p = A.rows();
  if (y.size() != n) throw DimensionError("project_onto_polytope", n, y.size());
  if (b.size() != p) throw DimensionError("project_onto_polytope rhs", p, b.size());

  if (p == 0) {
    PolytopeProjection trivial;
    trivial.point = y;
    trivial.multipliers.resize(0);
    return trivial;
  }

  Eigen::VectorXd row_norm(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    row_norm(i) = A.row(i).norm();
    if (row_norm(i) == 0.0 && b(i) < 0.0) throw InfeasibleError("polytope has a row 0 ≤ b with b < 0");
  }

  Eigen::VectorXd x = y;
  std::vector<Eigen::Index> active;
  std::vector<double> lambda;  // aligned with `active`
  int iterations = 0;

  while (true) {
    // Most violated constraint, scaled by row norm.
    Eigen::Index worst = -1;
    double worst_violation = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (row_norm(i) == 0.0) continue;
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      const double v = (A.row(i).dot(x) - b(i)) / row_norm(i);
      if (v > kViolationTol * (1.0 + std::abs(b(i)) / row_norm(i)) && v > worst_violation) {
        worst_violation = v;
        worst = i;
      }
    }
    if (worst < 0) break;

    const Eigen::VectorXd a = A.row(worst).transpose();
    double lambda_new = 0.0;
    while (true) {
      if (++iterations > kMaxIterations) throw RuntimeError("project_onto_polytope: iteration limit reached");
      const Eigen::MatrixXd N = gather(A, active);
      const ActiveSolve dir = solve_direction(N, a);

      double t_partial = std::numeric_limits<double>::infinity();
      std::size_t drop = active.size();
      for (std::size_t j = 0; j < active.size(); ++j) {
        const double rj = dir.r(static_cast<Eigen::Index>(j));
        if (rj > 1e-14) {
          const double t = lambda[j] / rj;
          if (t < t_partial) {
            t_partial = t;
            drop = j;
          }
        }
      }

      const double z2 = dir.z.squaredNorm();
      const bool degenerate = z2 <= 1e-20 * a.squaredNorm();
      const double t_full = degenerate ? std::numeric_limits<double>::infinity()
                                       : (a.dot(x) - b(worst)) / z2;

      if (degenerate && drop == active.size()) {
        throw InfeasibleError("polytope {x : Ax <= b} is empty");
      }

      const double t = std::min(t_partial, t_full);
      for (std::size_t j = 0; j < active.size(); ++j) lambda[j] -= t * dir.r(static_cast<Eigen::Index>(j));
      lambda_new += t;
      if (!degenerate) x += t * dir.z;

      if (t_full <= t_partial) {
        active.push_back(worst);
        lambda.push_back(lambda_new);
        break;
      }
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
      lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }

  // Exact re-solve on the final active set.
  if (!active.empty()) {
    const Eigen::MatrixXd N = gather(A, active);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) rhs(static_cast<Eigen::Index>(j)) = b(active[j]);
    const Eigen::VectorXd lam = (N.transpose() * N).ldlt().solve(N.transpose() * y - rhs);
    const Eigen::VectorXd polished = y - N * lam;
    if (lam.minCoeff() >= -1e-12 && ((A * polished - b).array() <= 1e-11).all()) {
      x = polished;
      for (std::size_t j = 0; j < active.size(); ++j) lambda[j] = std::max(0.0, lam(static_cast<Eigen::Index>(j)));
    }
  }

  PolytopeProjection out;
  out.point = x;
  out.multipliers = Eigen::VectorXd::Zero(p);
  for (std::size_t j = 0; j < active.size(); ++j) out.multipliers(active[j]) = lambda[j];
  out.active = active;
  out.iterations = iterations;

  const Eigen::VectorXd slack = A * x - b;
  const double stationarity = (x - y + A.transpose() * out.multipliers).lpNorm<Eigen::Infinity>();
  const double primal = std::max(0.0, slack.maxCoeff());
  const double complementarity = (out.multipliers.array() * slack.array()).abs().maxCoeff();
  out.kkt_residual = std::max({stationarity, primal, complementarity});
  return out;
}

}  // namespace probmax
