#include "snum/search.hpp"

#include <algorithm>

namespace snum {

SearchResult compass_minimize(const std::function<double(const Vec&)>& f, Vec z0, double step,
                              double min_step, long max_evaluations) {
  SearchResult out;
  out.point = std::move(z0);
  out.value = f(out.point);
  out.evaluations = 1;
  double h = step * std::max(1.0, out.point.size() ? out.point.cwiseAbs().maxCoeff() : 1.0);
  while (h >= min_step && out.evaluations < max_evaluations) {
    bool improved = false;
    for (Eigen::Index i = 0; i < out.point.size() && out.evaluations < max_evaluations; ++i) {
      for (double dir : {1.0, -1.0}) {
        Vec cand = out.point;
        cand(i) += dir * h;
        const double v = f(cand);
        ++out.evaluations;
        if (v < out.value) {
          out.value = v;
          out.point = std::move(cand);
          improved = true;
          break;
        }
      }
    }
    if (!improved) h *= 0.5;
  }
  return out;
}

}  // namespace snum
