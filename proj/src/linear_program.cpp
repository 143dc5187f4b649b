#include "probmax/linear_program.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "probmax/errors.hpp"

namespace probmax {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-10;

class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : t_(Eigen::MatrixXd::Zero(rows + 1, cols + 1)), basis_(rows) {}

  Eigen::MatrixXd& t() { return t_; }
  std::vector<Eigen::Index>& basis() { return basis_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  double rhs(Eigen::Index r) const { return t_(r, cols()); }
  double& cost(Eigen::Index c) { return t_(rows(), c); }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Zero the objective row on basic columns.
  void price_out() {
    for (Eigen::Index r = 0; r < rows(); ++r) {
      const Eigen::Index c = basis_[static_cast<std::size_t>(r)];
      const double coef = t_(rows(), c);
      if (coef != 0.0) t_.row(rows()) -= coef * t_.row(r);
    }
  }

  // Maximizes with objective row holding negated reduced costs. Columns at or
  // beyond `allowed` never enter. Returns false when unbounded.
  bool run(Eigen::Index allowed) {
    const std::size_t max_iter = 50000;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index c = 0; c < allowed; ++c) {
        if (t_(rows(), c) < -kCostTol) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return true;

      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < rows(); ++r) {
        const double a = t_(r, enter);
        if (a <= kPivotTol) continue;
        const double ratio = rhs(r) / a;
        if (ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 && leave >= 0 &&
             basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw RuntimeError("simplex: iteration limit reached");
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

LpResult maximize_linear(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = A.cols();
  const Eigen::Index m = A.rows();
  if (c.size() != n) throw DimensionError("maximize_linear objective", n, c.size());
  if (b.size() != m) throw DimensionError("maximize_linear rhs", m, b.size());

  // Columns: u (n), v (n), slacks (m), artificials (one per negative rhs row).
  std::vector<Eigen::Index> art_rows;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b(i) < 0.0) art_rows.push_back(i);
  }
  const Eigen::Index n_struct = 2 * n + m;
  const Eigen::Index n_art = static_cast<Eigen::Index>(art_rows.size());
  Tableau tab(m, n_struct + n_art);
  auto& t = tab.t();

  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    t.block(i, 0, 1, n) = sign * A.row(i);
    t.block(i, n, 1, n) = -sign * A.row(i);
    t(i, 2 * n + i) = sign;
    t(i, tab.cols()) = sign * b(i);
    tab.basis()[static_cast<std::size_t>(i)] = 2 * n + i;
  }
  for (Eigen::Index k = 0; k < n_art; ++k) {
    const Eigen::Index i = art_rows[static_cast<std::size_t>(k)];
    t(i, n_struct + k) = 1.0;
    tab.basis()[static_cast<std::size_t>(i)] = n_struct + k;
  }

  if (n_art > 0) {
    for (Eigen::Index k = 0; k < n_art; ++k) tab.cost(n_struct + k) = 1.0;
    tab.price_out();
    tab.run(tab.cols());
    if (t(m, tab.cols()) < -1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
      return {LpStatus::kInfeasible, {}, 0.0};
    }
    // Drive remaining artificials out of the basis where possible.
    for (Eigen::Index r = 0; r < m; ++r) {
      if (tab.basis()[static_cast<std::size_t>(r)] < n_struct) continue;
      for (Eigen::Index col = 0; col < n_struct; ++col) {
        if (std::abs(t(r, col)) > 1e-9) {
          tab.pivot(r, col);
          break;
        }
      }
    }
    t.row(m).setZero();
  }

  for (Eigen::Index j = 0; j < n; ++j) {
    tab.cost(j) = -c(j);
    tab.cost(n + j) = c(j);
  }
  tab.price_out();
  if (!tab.run(n_struct)) return {LpStatus::kUnbounded, {}, 0.0};

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index col = tab.basis()[static_cast<std::size_t>(r)];
    if (col < n) x(col) += tab.rhs(r);
    else if (col < 2 * n) x(col - n) -= tab.rhs(r);
  }
  return {LpStatus::kOptimal, x, c.dot(x)};
}

}  // namespace probmax
