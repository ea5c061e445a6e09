#include "snum/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace snum {
namespace {

// Hestenes one-sided Jacobi on the columns of `work` (rows >= cols).
// Returns the number of sweeps used.
int jacobi_orthogonalize(Matrix& work, Matrix& v, int max_sweeps, double threshold) {
  const Eigen::Index n = work.cols();
  // Columns below this squared norm are numerically zero and never rotated.
  const double negligible = 1e-30 * work.squaredNorm();
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double alpha = work.col(i).squaredNorm();
        const double beta = work.col(j).squaredNorm();
        const double gamma = work.col(i).dot(work.col(j));
        if (alpha <= negligible || beta <= negligible) continue;
        const double rel = std::abs(gamma) / std::sqrt(alpha * beta);
        off = std::max(off, rel);
        if (rel <= threshold) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index r = 0; r < work.rows(); ++r) {
          const double wi = work(r, i), wj = work(r, j);
          work(r, i) = c * wi - s * wj;
          work(r, j) = s * wi + c * wj;
        }
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
          const double vi = v(r, i), vj = v(r, j);
          v(r, i) = c * vi - s * vj;
          v(r, j) = s * vi + c * vj;
        }
      }
    }
    if (off <= threshold) return sweep;
  }
  throw Error(ErrorCode::convergence_failure,
              "Jacobi SVD did not converge in " + std::to_string(max_sweeps) + " sweeps");
}

// Fill columns of `q` flagged in `missing` so that q has orthonormal columns.
void complete_orthonormal(Matrix& q, const std::vector<bool>& missing) {
  const Eigen::Index m = q.rows();
  Eigen::Index next_basis = 0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (!missing[static_cast<size_t>(j)]) continue;
    while (next_basis < m) {
      Vec cand = Vec::Unit(m, next_basis++);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index k = 0; k < q.cols(); ++k) {
          if (k == j || (missing[static_cast<size_t>(k)] && k > j)) continue;
          cand -= q.col(k).dot(cand) * q.col(k);
        }
      }
      const double nrm = cand.norm();
      if (nrm > 1e-8) {
        q.col(j) = cand / nrm;
        break;
      }
    }
  }
}

}  // namespace

SvdResult svd(const Matrix& a, int max_sweeps, double threshold) {
  if (!a.allFinite()) throw Error(ErrorCode::invalid_argument, "svd: matrix has non-finite entries");
  const bool transposed = a.rows() < a.cols();
  Matrix work = transposed ? Matrix(a.transpose()) : a;
  const Eigen::Index n = work.cols();
  Matrix v = Matrix::Identity(n, n);
  SvdResult out;
  out.sweeps = n > 1 ? jacobi_orthogonalize(work, v, max_sweeps, threshold) : 0;

  Vec sigma(n);
  for (Eigen::Index j = 0; j < n; ++j) sigma(j) = work.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return sigma(x) > sigma(y); });

  const double scale = n > 0 ? sigma(order[0]) : 0.0;
  Matrix u(work.rows(), n);
  Matrix vs(n, n);
  Vec values(n);
  std::vector<bool> missing(static_cast<size_t>(n), false);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[static_cast<size_t>(k)];
    values(k) = sigma(j);
    vs.col(k) = v.col(j);
    if (sigma(j) > 1e-14 * std::max(scale, 1e-300) && sigma(j) > 0.0) {
      u.col(k) = work.col(j) / sigma(j);
    } else {
      u.col(k).setZero();
      missing[static_cast<size_t>(k)] = true;
    }
  }
  complete_orthonormal(u, missing);

  out.values = values;
  if (transposed) {
    out.u = vs;
    out.v = u;
  } else {
    out.u = u;
    out.v = vs;
  }
  return out;
}

int numerical_rank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  const SvdResult s = svd(a);
  if (s.values.size() == 0 || s.values(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    if (s.values(i) > rel_tol * s.values(0)) ++r;
  return r;
}

Matrix orthonormal_basis(const Matrix& frame, double rel_tol) {
  if (frame.cols() == 0) return Matrix(frame.rows(), 0);
  const SvdResult s = svd(frame);
  const double top = s.values.size() ? s.values(0) : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    if (top > 0.0 && s.values(i) > rel_tol * std::max(top, 1.0)) ++r;
  return s.u.leftCols(r);
}

Matrix null_space(const Matrix& f, double rel_tol) {
  const Eigen::Index d = f.cols();
  if (f.rows() == 0) return Matrix::Identity(d, d);
  // Null space of f = orthogonal complement of the row span.
  const Matrix rows = orthonormal_basis(f.transpose(), rel_tol);
  Matrix proj = Matrix::Identity(d, d) - rows * rows.transpose();
  const SvdResult s = svd(proj);
  const int keep = static_cast<int>(d - rows.cols());
  return s.u.leftCols(keep);
}

Matrix pseudo_inverse(const Matrix& a, double rel_tol) {
  const SvdResult s = svd(a);
  Matrix out = Matrix::Zero(a.cols(), a.rows());
  const double top = s.values.size() ? s.values(0) : 0.0;
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    if (top > 0.0 && s.values(i) > rel_tol * top)
      out += s.v.col(i) * s.u.col(i).transpose() / s.values(i);
  }
  return out;
}

}  // namespace snum
