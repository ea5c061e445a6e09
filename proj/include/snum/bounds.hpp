#pragma once

#include <cstdint>
#include <string>

#include "snum/spaces.hpp"

namespace snum {

/// Certified lower bounds shared by the approximation, Kolmogorov, Gelfand
/// and symmetrized numbers (all s-numbers dominate them).
struct BoundOptions {
  int restarts = 6;
  int iters = 120;
  std::uint64_t seed = 0;
  int vertex_cap = 16;
  int coordinate_cap = 200;
};

struct LowerBound {
  double value = 0.0;
  std::string method = "none";
};

/// sigma_n(T) scaled by the norm-equivalence constants of T's spaces.
double equivalence_lower(const LinearOperator& t, int n);

/// sup over R (n x m), K (d x n) of 1 / (||(R T K)^{-1}|| ||R|| ||K||).
LowerBound compression_lower(const LinearOperator& t, int n, const BoundOptions& opts = {});

/// Bernstein number search: sup over n-dim E of inf_{x in E} ||Tx|| / ||x||.
/// Zero when the domain is Euclidean.
LowerBound bernstein_lower(const LinearOperator& t, int n, const BoundOptions& opts = {});

/// Best of the above applied to T and to its adjoint.
LowerBound s_number_lower(const LinearOperator& t, int n, const BoundOptions& opts = {});

}  // namespace snum
