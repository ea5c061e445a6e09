#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "snum/rng.hpp"
#include "snum/spaces.hpp"

namespace snum::test {

inline const NormExp kExps[] = {NormExp::one, NormExp::two, NormExp::inf};

inline NormExp any_exp(Rng& rng) { return kExps[rng.uniform_int(0, 2)]; }
inline NormExp polyhedral_exp(Rng& rng) { return rng.uniform_int(0, 1) ? NormExp::inf : NormExp::one; }

// Mixes dense gaussian, small-integer and rank-deficient draws.
inline Matrix matrix_gen(Rng& rng, int rows, int cols) {
  switch (rng.uniform_int(0, 3)) {
    case 0: {
      Matrix m(rows, cols);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform_int(-3, 3);
      return m;
    }
    case 1: {
      const int r = rng.uniform_int(0, std::min(rows, cols));
      return rng.normal_matrix(rows, r) * rng.normal_matrix(r, cols);
    }
    default: return rng.normal_matrix(rows, cols);
  }
}

inline LinearOperator operator_gen(Rng& rng, int max_dim, NormExp p, NormExp q) {
  const int rows = rng.uniform_int(1, max_dim), cols = rng.uniform_int(1, max_dim);
  return LinearOperator(matrix_gen(rng, rows, cols), p, q);
}

inline LinearOperator hilbert_gen(Rng& rng, int max_dim) { return operator_gen(rng, max_dim, NormExp::two, NormExp::two); }

inline LinearOperator polyhedral_gen(Rng& rng, int max_dim) {
  return operator_gen(rng, max_dim, polyhedral_exp(rng), polyhedral_exp(rng));
}

inline Matrix diag(std::initializer_list<double> v) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

// Orthogonal matrix from a QR of a gaussian draw.
inline Matrix orthogonal_gen(Rng& rng, int d) {
  Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(d, d));
  return qr.householderQ() * Matrix::Identity(d, d);
}

// ||x||_p over the unit sphere for a sampled direction, used by independent norm checks.
inline double ratio(const Matrix& m, const Vec& x, NormExp p, NormExp q) { return norm(m * x, q) / norm(x, p); }

}  // namespace snum::test
