#pragma once

#include <functional>

#include "snum/spaces.hpp"

namespace snum {

struct SearchResult {
  Vec point;
  double value = 0.0;
  long evaluations = 0;
};

/// Derivative-free compass (coordinate pattern) search. The initial step is
/// `step` scaled by max(1, |z0|_inf); the step halves after every sweep
/// without improvement until it drops below `min_step`.
SearchResult compass_minimize(const std::function<double(const Vec&)>& f, Vec z0, double step,
                              double min_step, long max_evaluations);

}  // namespace snum
