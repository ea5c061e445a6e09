#pragma once

#include <vector>

#include "snum/spaces.hpp"

namespace snum {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Vec x;             // primal solution
  Vec y;             // dual solution / multipliers
  double objective = 0.0;
  int iterations = 0;
  std::vector<int> basis;
};

/// Dense two-phase tableau simplex with Bland's rule:
///   maximize c^T x  subject to  A x = b,  x >= 0.
/// `y` holds the simplex multipliers (A^T y >= c at optimality).
LpResult solve_standard_lp(const Matrix& a, const Vec& b, const Vec& c, int max_iterations = 200000);

/// minimize c^T z subject to G z <= h with z free, solved through its
/// standard-form dual. `y` holds the nonnegative constraint multipliers.
LpResult solve_inequality_lp(const Vec& c, const Matrix& g, const Vec& h, int max_iterations = 200000);

}  // namespace snum
