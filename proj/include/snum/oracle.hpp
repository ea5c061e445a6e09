#pragma once

#include <cstdint>
#include <string>

#include "snum/linalg.hpp"
#include "snum/spaces.hpp"

namespace snum {

/// Brute-force ground truth at tiny scale.
struct OracleResult {
  double value = 0.0;
  std::string transcript;   // enumeration / LP / restart log
  long cost = 0;            // vertices visited, simplex pivots or norm evaluations
  bool certified = true;    // false when a budget cut the search short
  bool self_check_failed = false;
  Vec point;                // maximizing vertex or optimal frame coefficients
  Matrix witness;           // approximant for brute_rank_approx

  std::uint64_t transcript_hash() const;
};

/// max ||Tx|| over all extreme points of the domain ball.
OracleResult vertex_norm_oracle(const LinearOperator& t, int vertex_cap = 16);

/// min over g in span(frame columns) of ||point - g||_q.
OracleResult lp_distance(const Vec& point, const Matrix& frame, NormExp q);

struct OracleBudget {
  int restarts = 320;
  std::uint64_t seed = 0;
  long max_evaluations = 0;  // 0 = unlimited
  int threads = 0;
  double target = -1.0;      // stop at the first start reaching this value
};

/// inf ||T - A|| over rank(A) < n with dense restarts and structured starts.
OracleResult brute_rank_approx(const LinearOperator& t, int n, const OracleBudget& budget = {});

/// Singular values and factors (the in-repo Jacobi SVD).
inline SvdResult oracle_svd(const Matrix& m) { return svd(m); }

}  // namespace snum
