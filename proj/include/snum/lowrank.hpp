#pragma once

#include <cstdint>
#include <string>

#include "snum/spaces.hpp"

namespace snum {

/// Settings for the multi-start alternating minimization of ||T - U Y||
/// over U (m x k), Y (k x d) in the operator norm of T's spaces.
struct RankApproxOptions {
  int restarts = 32;
  std::uint64_t seed = 0;
  int max_iters = 40;
  double tol = 1e-12;
  int kicks = 2;              // perturb-and-rerun rounds per restart
  bool structured = false;    // add coordinate-subspace starts
  bool polish = false;        // joint pattern search on the best point of every start
  int vertex_cap = 16;
  int threads = 0;
  long max_evaluations = 0;   // 0 = unlimited
  // Stop at the first start (in start order) whose value is <= target.
  double target = -1.0;
};

struct RankApproxResult {
  double value = 0.0;         // exact ||T - A|| of the returned A
  Matrix a;                   // approximant, rank <= k
  Matrix u;                   // m x k
  Matrix y;                   // k x d
  int best_start = -1;
  int starts = 0;
  long evaluations = 0;
  bool budget_hit = false;
};

/// min ||T - A|| over rank(A) <= k. The value is always re-evaluated
/// exactly on the returned approximant, so it is a certified upper bound.
RankApproxResult best_rank_approx(const LinearOperator& t, int k, const RankApproxOptions& opts);

/// Optimal Y for fixed U (and U for fixed Y) in the operator norm; exact for
/// polyhedral pairs (LP) and Euclidean sides (projection), pattern search otherwise.
Matrix fit_right(const LinearOperator& t, const Matrix& u, int vertex_cap = 16);
Matrix fit_left(const LinearOperator& t, const Matrix& y, int vertex_cap = 16);

}  // namespace snum
