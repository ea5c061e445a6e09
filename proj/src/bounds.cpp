#include "snum/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "snum/linalg.hpp"
#include "snum/lp.hpp"
#include "snum/rng.hpp"

namespace snum {
namespace {

// Relative safety margin for values computed through a numerical inverse.
constexpr double kMargin = 1e-12;

void for_each_subset(int n, int k, int cap, const std::function<void(const std::vector<int>&)>& fn) {
  if (k > n || k <= 0) return;
  std::vector<int> idx(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<size_t>(i)] = i;
  for (int emitted = 0; emitted < cap; ++emitted) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
  }
}

Matrix selection(int dim, const std::vector<int>& idx) {
  Matrix s = Matrix::Zero(dim, static_cast<Eigen::Index>(idx.size()));
  for (size_t a = 0; a < idx.size(); ++a) s(idx[a], static_cast<Eigen::Index>(a)) = 1.0;
  return s;
}

// Generic hill climb over a parameter matrix pair.
template <typename Eval>
double hill_climb(Matrix& x, Matrix& y, double value, int iters, Rng& rng, Eval&& eval) {
  double scale = 0.3;
  for (int it = 0; it < iters && scale > 1e-7; ++it) {
    Matrix nx = x, ny = y;
    if (it % 2 == 0 || y.size() == 0) nx += scale * rng.normal_matrix(x.rows(), x.cols()) * std::max(1.0, x.cwiseAbs().maxCoeff());
    else ny += scale * rng.normal_matrix(y.rows(), y.cols()) * std::max(1.0, y.cwiseAbs().maxCoeff());
    const double v = eval(nx, ny);
    if (v > value) {
      x = std::move(nx);
      y = std::move(ny);
      value = v;
      scale *= 1.3;
    } else {
      scale *= 0.8;
    }
  }
  return value;
}

double compression_value(const LinearOperator& t, int n, const Matrix& r, const Matrix& k, int cap) {
  const NormExp p = t.domain().p(), q = t.codomain().p();
  const Matrix b = r * t.matrix() * k;
  Eigen::FullPivLU<Matrix> lu(b);
  if (!lu.isInvertible()) return 0.0;
  const SvdResult s = svd(b);
  if (s.values(n - 1) <= 1e-12 * std::max(s.values(0), 1e-300)) return 0.0;
  const Matrix binv = lu.inverse();
  const double inv_norm = exact_operator_norm(binv, q, p, cap);
  const double rn = exact_operator_norm(r, q, q, cap);
  const double kn = exact_operator_norm(k, p, p, cap);
  if (!(inv_norm > 0.0) || !(rn > 0.0) || !(kn > 0.0)) return 0.0;
  return (1.0 - kMargin) / (inv_norm * rn * kn);
}

// sup { ||V c||_p : ||T V c||_q <= 1 }, p polyhedral. Infinity when T V is singular.
double bernstein_sup(const LinearOperator& t, const Matrix& v, int cap) {
  const NormExp p = t.domain().p(), q = t.codomain().p();
  const Eigen::Index n = v.cols(), m = t.rows();
  const Matrix tv = t.matrix() * v;
  const SvdResult s = svd(tv);
  if (s.values(n - 1) <= 1e-12 * std::max(s.values(0), 1e-300)) return std::numeric_limits<double>::infinity();
  if (q == NormExp::two) {
    // tv = Q R with Q orthonormal; ||tv c||_2 = ||R c||_2.
    Eigen::HouseholderQR<Matrix> qr(tv);
    const Matrix rr = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    const Matrix w = v * rr.inverse();
    return exact_operator_norm(w, NormExp::two, p, cap);
  }
  // Constraints ||tv c||_q <= 1.
  Matrix g;
  Vec h;
  if (q == NormExp::inf) {
    g.resize(2 * m, n);
    g << tv, -tv;
    h = Vec::Ones(2 * m);
  } else {
    const Eigen::Index count = Eigen::Index{1} << std::min<Eigen::Index>(m, 12);
    if (m > 12) return std::numeric_limits<double>::infinity();
    Matrix signs(m, count);
    for (Eigen::Index c = 0; c < count; ++c)
      for (Eigen::Index i = 0; i < m; ++i) signs(i, c) = ((c >> i) & 1) ? -1.0 : 1.0;
    g = signs.transpose() * tv;
    h = Vec::Ones(count);
  }
  // Objective directions: rows of V (p = inf) or sign combinations (p = 1).
  Matrix dirs;
  if (p == NormExp::inf) {
    dirs = v;
  } else {
    const Matrix half = extreme_point_matrix(NormedSpace(static_cast<int>(v.rows()), NormExp::inf), cap);
    dirs = half.transpose() * v;
  }
  double best = 0.0;
  for (Eigen::Index i = 0; i < dirs.rows(); ++i) {
    const LpResult res = solve_inequality_lp(-dirs.row(i).transpose(), g, h);
    if (res.status != LpStatus::optimal) return std::numeric_limits<double>::infinity();
    best = std::max(best, -res.objective);
  }
  // The LP optimum is re-evaluated exactly below by the caller's margin.
  return best;
}

double bernstein_value(const LinearOperator& t, const Matrix& v, int cap) {
  const double sup = bernstein_sup(t, v, cap);
  if (!std::isfinite(sup) || sup <= 0.0) return 0.0;
  return (1.0 - 1e-9) / sup;
}

}  // namespace

double equivalence_lower(const LinearOperator& t, int n) {
  const SvdResult s = svd(t.matrix());
  if (n < 1 || n > s.values.size()) return 0.0;
  const double alpha = identity_norm(t.cols(), NormExp::two, t.domain().p());
  const double beta_inv = identity_norm(t.rows(), t.codomain().p(), NormExp::two);
  return s.values(n - 1) / (alpha * beta_inv) * (1.0 - kMargin);
}

LowerBound compression_lower(const LinearOperator& t, int n, const BoundOptions& opts) {
  const int m = t.rows(), d = t.cols();
  LowerBound out;
  if (n < 1 || n > std::min(m, d)) return out;
  auto eval = [&](const Matrix& r, const Matrix& k) { return compression_value(t, n, r, k, opts.vertex_cap); };

  struct Cand {
    Matrix r, k;
    double v;
  };
  std::vector<Cand> cands;
  // Coordinate blocks.
  int budget = opts.coordinate_cap;
  Cand best_coord{Matrix(), Matrix(), -1.0};
  for_each_subset(m, n, budget, [&](const std::vector<int>& rows) {
    for_each_subset(d, n, std::max(1, budget / std::max(1, m)), [&](const std::vector<int>& cols) {
      const Matrix r = selection(m, rows).transpose();
      const Matrix k = selection(d, cols);
      const double v = eval(r, k);
      if (v > best_coord.v) best_coord = {r, k, v};
    });
  });
  if (best_coord.v >= 0.0) cands.push_back(best_coord);
  const SvdResult s = svd(t.matrix());
  {
    const Matrix r = s.u.leftCols(n).transpose();
    const Matrix k = s.v.leftCols(n);
    cands.push_back({r, k, eval(r, k)});
  }
  for (int j = 0; j < opts.restarts; ++j) {
    Rng rng = Rng::stream(opts.seed ^ 0xC0FFEEull, static_cast<std::uint64_t>(j));
    Cand c = j < static_cast<int>(cands.size()) ? cands[static_cast<size_t>(j)]
                                                : Cand{rng.normal_matrix(n, m), rng.normal_matrix(d, n), 0.0};
    c.v = eval(c.r, c.k);
    c.v = hill_climb(c.r, c.k, c.v, opts.iters, rng, eval);
    if (c.v > out.value) out = {c.v, "compression"};
  }
  for (const auto& c : cands)
    if (c.v > out.value) out = {c.v, "compression"};
  return out;
}

LowerBound bernstein_lower(const LinearOperator& t, int n, const BoundOptions& opts) {
  const int m = t.rows(), d = t.cols();
  LowerBound out;
  if (!t.domain().polyhedral() || n < 1 || n > std::min(m, d)) return out;
  if (t.domain().p() == NormExp::one && d > opts.vertex_cap) return out;
  if (t.codomain().p() == NormExp::one && m > 12) return out;
  auto eval = [&](const Matrix& v, const Matrix&) { return bernstein_value(t, v, opts.vertex_cap); };
  std::vector<Matrix> seeds;
  Matrix best_coord;
  double best_coord_v = -1.0;
  for_each_subset(d, n, opts.coordinate_cap, [&](const std::vector<int>& cols) {
    const Matrix v = selection(d, cols);
    const double val = eval(v, Matrix());
    if (val > best_coord_v) {
      best_coord_v = val;
      best_coord = v;
    }
  });
  if (best_coord_v >= 0.0) seeds.push_back(best_coord);
  seeds.push_back(svd(t.matrix()).v.leftCols(n));
  Matrix empty;
  for (int j = 0; j < opts.restarts; ++j) {
    Rng rng = Rng::stream(opts.seed ^ 0xBE57ull, static_cast<std::uint64_t>(j));
    Matrix v = j < static_cast<int>(seeds.size()) ? seeds[static_cast<size_t>(j)] : rng.normal_matrix(d, n);
    double val = eval(v, empty);
    val = hill_climb(v, empty, val, opts.iters / 2, rng, eval);
    if (val > out.value) out = {val, "bernstein"};
  }
  if (best_coord_v > out.value) out = {best_coord_v, "bernstein"};
  return out;
}

LowerBound s_number_lower(const LinearOperator& t, int n, const BoundOptions& opts) {
  LowerBound best{equivalence_lower(t, n), "norm_equivalence"};
  const LinearOperator ts = adjoint(t);
  for (const LinearOperator* op : {&t, &ts}) {
    const LowerBound c = compression_lower(*op, n, opts);
    if (c.value > best.value) best = c;
    const LowerBound b = bernstein_lower(*op, n, opts);
    if (b.value > best.value) best = b;
  }
  return best;
}

}  // namespace snum
