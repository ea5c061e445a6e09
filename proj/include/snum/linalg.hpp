#pragma once

#include "snum/spaces.hpp"

namespace snum {

struct SvdResult {
  Vec values;  // non-increasing, length min(rows, cols)
  Matrix u;    // rows x r, orthonormal columns
  Matrix v;    // cols x r, orthonormal columns
  int sweeps = 0;
};

/// One-sided Jacobi SVD. Throws ConvergenceFailure after `max_sweeps`.
SvdResult svd(const Matrix& a, int max_sweeps = 50, double threshold = 1e-12);

/// Numerical rank with relative tolerance.
int numerical_rank(const Matrix& a, double rel_tol = 1e-10);

/// Orthonormal basis of the column span (rank-revealing, tolerance relative to the largest column).
Matrix orthonormal_basis(const Matrix& frame, double rel_tol = 1e-10);

/// Orthonormal basis of the null space of the rows of `f` (f is k x d).
Matrix null_space(const Matrix& f, double rel_tol = 1e-10);

/// Moore-Penrose pseudo-inverse via svd.
Matrix pseudo_inverse(const Matrix& a, double rel_tol = 1e-12);

}  // namespace snum
