#include "snum/lp.hpp"

#include <cmath>
#include <limits>

namespace snum {
namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-11;

class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : t_(Matrix::Zero(rows + 1, cols + 1)) {}

  Matrix& data() { return t_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  double& obj(Eigen::Index j) { return t_(rows(), j); }
  double& rhs(Eigen::Index i) { return t_(i, cols()); }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
      t_(i, c) = 0.0;
    }
    // Flush rounding noise so degenerate vertices stay exactly degenerate.
    for (Eigen::Index i = 0; i < rows(); ++i) {
      for (Eigen::Index j = 0; j < t_.cols(); ++j)
        if (std::abs(t_(i, j)) < 1e-13) t_(i, j) = 0.0;
      if (rhs(i) < 0.0) rhs(i) = 0.0;
    }
  }

 private:
  Matrix t_;
};

// Runs Bland's rule on columns [0, allowed). Returns false when unbounded.
bool run_simplex(Tableau& tab, std::vector<int>& basis, Eigen::Index allowed, int& iterations,
                 int max_iterations) {
  const Eigen::Index m = tab.rows();
  for (;;) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < allowed; ++j) {
      if (tab.obj(j) < -kCostTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = tab.data()(i, enter);
      if (a <= kPivotTol) continue;
      const double ratio = tab.rhs(i) / a;
      const double tie = 1e-12 * (1.0 + std::abs(best));
      if (leave < 0 || ratio < best - tie ||
          (ratio <= best + tie && basis[static_cast<size_t>(i)] < basis[static_cast<size_t>(leave)])) {
        best = std::min(best, ratio);
        leave = i;
      }
    }
    if (leave < 0) return false;
    tab.pivot(leave, enter);
    basis[static_cast<size_t>(leave)] = static_cast<int>(enter);
    if (++iterations > max_iterations)
      throw Error(ErrorCode::convergence_failure, "simplex iteration limit reached");
  }
}

}  // namespace

LpResult solve_standard_lp(const Matrix& a, const Vec& b, const Vec& c, int max_iterations) {
  const Eigen::Index m = a.rows(), n = a.cols();
  if (b.size() != m || c.size() != n) throw Error(ErrorCode::invalid_argument, "LP dimension mismatch");

  Tableau tab(m, n + m);
  Vec sign = Vec::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b(i) < 0) sign(i) = -1.0;
    tab.data().block(i, 0, 1, n) = sign(i) * a.row(i);
    tab.data()(i, n + i) = 1.0;
    tab.rhs(i) = sign(i) * b(i);
  }
  std::vector<int> basis(static_cast<size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<size_t>(i)] = static_cast<int>(n + i);

  // Phase 1: maximize -sum(artificials).
  for (Eigen::Index j = 0; j < n; ++j) tab.obj(j) = -tab.data().col(j).head(m).sum();
  tab.obj(n + m) = -tab.data().col(n + m).head(m).sum();

  LpResult out;
  run_simplex(tab, basis, n, out.iterations, max_iterations);
  const double scale = 1.0 + b.cwiseAbs().sum();
  if (tab.obj(n + m) < -1e-9 * scale) {
    out.status = LpStatus::infeasible;
    return out;
  }
  // Drive artificials out of the basis where possible.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<size_t>(i)] < n) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(tab.data()(i, j)) > 1e-9) {
        tab.pivot(i, j);
        basis[static_cast<size_t>(i)] = static_cast<int>(j);
        break;
      }
    }
  }

  // Phase 2 objective row: r_j = c_B^T B^{-1} A_j - c_j.
  Vec cost = Vec::Zero(n + m);
  cost.head(n) = c;
  for (Eigen::Index j = 0; j <= n + m; ++j) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) r += cost(basis[static_cast<size_t>(i)]) * tab.data()(i, j);
    tab.obj(j) = (j < n + m) ? r - cost(j) : r;
  }
  if (!run_simplex(tab, basis, n, out.iterations, max_iterations)) {
    out.status = LpStatus::unbounded;
    return out;
  }

  out.status = LpStatus::optimal;
  out.x = Vec::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const int bi = basis[static_cast<size_t>(i)];
    if (bi < n) out.x(bi) = tab.rhs(i);
  }
  out.y = Vec(m);
  for (Eigen::Index i = 0; i < m; ++i) out.y(i) = sign(i) * tab.obj(n + i);
  out.objective = c.dot(out.x);
  out.basis = basis;
  return out;
}

LpResult solve_inequality_lp(const Vec& c, const Matrix& g, const Vec& h, int max_iterations) {
  // Dual: maximize -h^T l  s.t.  G^T l = -c, l >= 0; primal z = -(dual multipliers).
  LpResult dual = solve_standard_lp(g.transpose(), -c, -h, max_iterations);
  LpResult out;
  out.iterations = dual.iterations;
  out.basis = dual.basis;
  if (dual.status == LpStatus::infeasible) {
    out.status = LpStatus::unbounded;
    return out;
  }
  if (dual.status == LpStatus::unbounded) {
    out.status = LpStatus::infeasible;
    return out;
  }
  out.status = LpStatus::optimal;
  out.x = -dual.y;
  out.y = dual.x;
  out.objective = c.dot(out.x);
  return out;
}

}  // namespace snum
