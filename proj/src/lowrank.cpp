#include "snum/lowrank.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <cmath>
#include <limits>
#include <optional>

#include "snum/linalg.hpp"
#include "snum/lp.hpp"
#include "snum/parallel.hpp"
#include "snum/rng.hpp"
#include "snum/search.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace snum {
namespace {

constexpr Eigen::Index kMaxLpRows = 6000;
constexpr int kSignEnumerationMaxDim = 8;

Matrix sign_vectors(int m) {
  const Eigen::Index count = Eigen::Index{1} << m;
  Matrix out(m, count);
  for (Eigen::Index k = 0; k < count; ++k)
    for (int i = 0; i < m; ++i) out(i, k) = ((k >> i) & 1) ? -1.0 : 1.0;
  return out;
}

// minimize over z:  max_s || b_s - M_s z ||_q   (q in {1, inf}).
std::optional<Vec> min_max_residual(const Matrix& b, const std::vector<Matrix>& ms, NormExp q) {
  const Eigen::Index m = b.rows(), n_pts = b.cols();
  const Eigen::Index nz = ms.empty() ? 0 : ms.front().cols();
  if (q == NormExp::inf) {
    const Eigen::Index rows = 2 * m * n_pts;
    if (rows > kMaxLpRows) return std::nullopt;
    Matrix g(rows, nz + 1);
    Vec h(rows);
    Eigen::Index r = 0;
    for (Eigen::Index s = 0; s < n_pts; ++s) {
      for (Eigen::Index i = 0; i < m; ++i) {
        g.row(r).head(nz) = -ms[static_cast<size_t>(s)].row(i);
        g(r, nz) = -1.0;
        h(r++) = -b(i, s);
        g.row(r).head(nz) = ms[static_cast<size_t>(s)].row(i);
        g(r, nz) = -1.0;
        h(r++) = b(i, s);
      }
    }
    Vec c = Vec::Zero(nz + 1);
    c(nz) = 1.0;
    const LpResult res = solve_inequality_lp(c, g, h);
    if (res.status != LpStatus::optimal) return std::nullopt;
    return Vec(res.x.head(nz));
  }
  if (m <= kSignEnumerationMaxDim) {
    const Matrix signs = sign_vectors(static_cast<int>(m));
    const Eigen::Index rows = signs.cols() * n_pts;
    if (rows > kMaxLpRows) return std::nullopt;
    Matrix g(rows, nz + 1);
    Vec h(rows);
    Eigen::Index r = 0;
    for (Eigen::Index s = 0; s < n_pts; ++s) {
      const Matrix sm = signs.transpose() * ms[static_cast<size_t>(s)];
      const Vec sb = signs.transpose() * b.col(s);
      g.block(r, 0, signs.cols(), nz) = -sm;
      g.block(r, nz, signs.cols(), 1).setConstant(-1.0);
      h.segment(r, signs.cols()) = -sb;
      r += signs.cols();
    }
    Vec c = Vec::Zero(nz + 1);
    c(nz) = 1.0;
    const LpResult res = solve_inequality_lp(c, g, h);
    if (res.status != LpStatus::optimal) return std::nullopt;
    return Vec(res.x.head(nz));
  }
  // Auxiliary absolute-value variables e_{s,i}.
  const Eigen::Index n_aux = m * n_pts;
  const Eigen::Index rows = 2 * n_aux + n_pts;
  if (rows > kMaxLpRows) return std::nullopt;
  const Eigen::Index nv = nz + 1 + n_aux;
  Matrix g = Matrix::Zero(rows, nv);
  Vec h = Vec::Zero(rows);
  Eigen::Index r = 0;
  for (Eigen::Index s = 0; s < n_pts; ++s) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index e = nz + 1 + s * m + i;
      g.row(r).head(nz) = -ms[static_cast<size_t>(s)].row(i);
      g(r, e) = -1.0;
      h(r++) = -b(i, s);
      g.row(r).head(nz) = ms[static_cast<size_t>(s)].row(i);
      g(r, e) = -1.0;
      h(r++) = b(i, s);
    }
    g(r, nz) = -1.0;
    for (Eigen::Index i = 0; i < m; ++i) g(r, nz + 1 + s * m + i) = 1.0;
    h(r++) = 0.0;
  }
  Vec c = Vec::Zero(nv);
  c(nz) = 1.0;
  const LpResult res = solve_inequality_lp(c, g, h);
  if (res.status != LpStatus::optimal) return std::nullopt;
  return Vec(res.x.head(nz));
}

Vec flatten(const Matrix& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }
Matrix unflatten(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

double residual_norm(const LinearOperator& t, const Matrix& a, int cap) {
  return exact_operator_norm(t.matrix() - a, t.domain().p(), t.codomain().p(), cap);
}

// Orthonormal k columns spanning at least span(u).
Matrix orth_pad(const Matrix& u, Rng& rng) {
  const Eigen::Index m = u.rows(), k = u.cols();
  Matrix q = orthonormal_basis(u, 1e-12);
  while (q.cols() < k) {
    Vec cand = rng.normal_matrix(m, 1).col(0);
    cand -= q * (q.transpose() * cand);
    const double nc = cand.norm();
    if (nc < 1e-8) continue;
    Matrix next(m, q.cols() + 1);
    next << q, cand / nc;
    q = next;
  }
  return q;
}

}  // namespace

Matrix fit_right(const LinearOperator& t, const Matrix& u, int vertex_cap) {
  const NormExp p = t.domain().p(), q = t.codomain().p();
  const Eigen::Index k = u.cols(), d = t.cols();
  const Matrix proj = pseudo_inverse(u) * t.matrix();
  if (q == NormExp::two || k == 0) return proj;
  if (p != NormExp::two) {
    const Matrix s = extreme_point_matrix(t.domain(), vertex_cap);
    const Matrix b = t.matrix() * s;
    std::vector<Matrix> ms;
    ms.reserve(static_cast<size_t>(s.cols()));
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      ms.push_back(Eigen::kroneckerProduct(s.col(j).transpose(), u).eval());
    if (auto z = min_max_residual(b, ms, q)) return unflatten(*z, k, d);
  }
  auto f = [&](const Vec& z) { return residual_norm(t, u * unflatten(z, k, d), vertex_cap); };
  return unflatten(compass_minimize(f, flatten(proj), 0.25, 1e-10, 4000).point, k, d);
}

Matrix fit_left(const LinearOperator& t, const Matrix& y, int vertex_cap) {
  const NormExp p = t.domain().p(), q = t.codomain().p();
  const Eigen::Index k = y.rows(), m = t.rows();
  const Matrix proj = t.matrix() * pseudo_inverse(y);
  if (p == NormExp::two || k == 0) return proj;
  if (q != NormExp::two) {
    const Matrix s = extreme_point_matrix(t.domain(), vertex_cap);
    const Matrix b = t.matrix() * s;
    const Matrix ys = y * s;
    const Matrix eye = Matrix::Identity(m, m);
    std::vector<Matrix> ms;
    ms.reserve(static_cast<size_t>(s.cols()));
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      ms.push_back(Eigen::kroneckerProduct(ys.col(j).transpose(), eye).eval());
    if (auto z = min_max_residual(b, ms, q)) return unflatten(*z, m, k);
  }
  auto f = [&](const Vec& z) { return residual_norm(t, unflatten(z, m, k) * y, vertex_cap); };
  return unflatten(compass_minimize(f, flatten(proj), 0.25, 1e-10, 4000).point, m, k);
}

namespace {

struct StartOutcome {
  double value = std::numeric_limits<double>::infinity();
  Matrix u, y;
  long evaluations = 0;
};

StartOutcome run_start(const LinearOperator& t, Matrix u, Rng& rng, const RankApproxOptions& opts) {
  StartOutcome best;
  auto eval = [&](const Matrix& uu, const Matrix& yy) {
    ++best.evaluations;
    return residual_norm(t, uu * yy, opts.vertex_cap);
  };
  auto alternate = [&](Matrix uu) {
    uu = orth_pad(uu, rng);
    Matrix yy = fit_right(t, uu, opts.vertex_cap);
    double val = eval(uu, yy);
    for (int it = 0; it < opts.max_iters; ++it) {
      const Matrix u_next = orth_pad(fit_left(t, yy, opts.vertex_cap), rng);
      const Matrix y_next = fit_right(t, u_next, opts.vertex_cap);
      const double v_next = eval(u_next, y_next);
      if (v_next < val) {
        const bool small = val - v_next <= opts.tol * std::max(1.0, val);
        uu = u_next;
        yy = y_next;
        val = v_next;
        if (small) break;
      } else {
        break;
      }
    }
    if (val < best.value) {
      best.value = val;
      best.u = uu;
      best.y = yy;
    }
  };
  alternate(u);
  for (int kick = 0; kick < opts.kicks; ++kick) {
    const double scale = 0.3 / (kick + 1);
    alternate(best.u + scale * rng.normal_matrix(best.u.rows(), best.u.cols()));
  }
  if (opts.polish) {
    const Eigen::Index m = best.u.rows(), k = best.u.cols(), d = best.y.cols();
    Vec z(m * k + k * d);
    z << flatten(best.u), flatten(best.y);
    auto f = [&](const Vec& v) {
      return eval(unflatten(v.head(m * k), m, k), unflatten(v.tail(k * d), k, d));
    };
    const SearchResult pr = compass_minimize(f, z, 0.1, 1e-11, 6000);
    if (pr.value < best.value) {
      best.value = pr.value;
      best.u = unflatten(pr.point.head(m * k), m, k);
      best.y = unflatten(pr.point.tail(k * d), k, d);
    }
  }
  return best;
}

void for_each_subset(int n, int k, int cap, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> idx(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<size_t>(i)] = i;
  int emitted = 0;
  while (emitted < cap) {
    fn(idx);
    ++emitted;
    int i = k - 1;
    while (i >= 0 && idx[static_cast<size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
  }
}

}  // namespace

RankApproxResult best_rank_approx(const LinearOperator& t, int k, const RankApproxOptions& opts) {
  const int m = t.rows(), d = t.cols();
  RankApproxResult out;
  if (k < 0) throw Error(ErrorCode::invalid_argument, "rank must be nonnegative");
  if (k == 0) {
    out.a = Matrix::Zero(m, d);
    out.u = Matrix::Zero(m, 0);
    out.y = Matrix::Zero(0, d);
    out.value = residual_norm(t, out.a, opts.vertex_cap);
    out.best_start = 0;
    out.starts = 1;
    out.evaluations = 1;
    return out;
  }
  if (k >= std::min(m, d)) {
    const SvdResult s = svd(t.matrix());
    out.u = s.u.leftCols(std::min(m, d));
    out.y = s.values.asDiagonal() * s.v.leftCols(std::min(m, d)).transpose();
    out.a = t.matrix();
    out.value = 0.0;
    out.best_start = 0;
    out.starts = 1;
    return out;
  }

  // Start descriptors: -1 = SVD seed, -2 - c = coordinate subset c, j >= 1 = random stream j.
  std::vector<Matrix> coord_starts;
  if (opts.structured) {
    for_each_subset(m, k, 64, [&](const std::vector<int>& rows) {
      Matrix u = Matrix::Zero(m, k);
      for (int a = 0; a < k; ++a) u(rows[static_cast<size_t>(a)], a) = 1.0;
      coord_starts.push_back(u);
    });
  }
  struct Start {
    int random_index;  // 0 for deterministic starts
    Matrix u;
  };
  std::vector<Start> starts;
  const SvdResult s = svd(t.matrix());
  starts.push_back({0, s.u.leftCols(k)});
  for (auto& c : coord_starts) starts.push_back({0, c});
  for (int j = 1; j < opts.restarts; ++j) starts.push_back({j, Matrix()});

  const int count = static_cast<int>(starts.size());
  std::vector<StartOutcome> results(static_cast<size_t>(count));
  std::vector<char> skipped(static_cast<size_t>(count), 0);
  const long budget = opts.max_evaluations;
  std::atomic<long> spent{0};
  // Earliest start that reached the target; later starts are not needed.
  std::atomic<int> first_hit{count};
  // A finite budget is checked in start order, so it forces serial execution.
  const int threads = budget > 0 ? 1 : resolve_threads(opts.threads);
  parallel_for(count, threads, [&](int i) {
    if (i > first_hit.load()) {
      skipped[static_cast<size_t>(i)] = 2;
      return;
    }
    if (budget > 0 && spent.load() >= budget) {
      skipped[static_cast<size_t>(i)] = 1;
      return;
    }
    const Start& st = starts[static_cast<size_t>(i)];
    Rng rng = Rng::stream(opts.seed, static_cast<std::uint64_t>(st.random_index));
    Matrix u0 = st.u;
    if (st.random_index > 0) {
      u0 = (st.random_index % 2 == 1) ? rng.normal_matrix(m, k)
                                      : rng.uniform_matrix(m, k, -1.0, 1.0).array().sign().matrix();
    }
    results[static_cast<size_t>(i)] = run_start(t, u0, rng, opts);
    spent += results[static_cast<size_t>(i)].evaluations;
    if (results[static_cast<size_t>(i)].value <= opts.target) {
      int cur = first_hit.load();
      while (i < cur && !first_hit.compare_exchange_weak(cur, i)) {
      }
    }
  });

  out.value = std::numeric_limits<double>::infinity();
  const int last = std::min(count - 1, first_hit.load());
  for (int i = 0; i <= last; ++i) {
    if (skipped[static_cast<size_t>(i)]) {
      out.budget_hit = true;
      continue;
    }
    ++out.starts;
    out.evaluations += results[static_cast<size_t>(i)].evaluations;
    if (results[static_cast<size_t>(i)].value < out.value) {
      out.value = results[static_cast<size_t>(i)].value;
      out.u = results[static_cast<size_t>(i)].u;
      out.y = results[static_cast<size_t>(i)].y;
      out.best_start = i;
    }
  }
  out.a = out.u * out.y;
  out.value = residual_norm(t, out.a, opts.vertex_cap);
  return out;
}

}  // namespace snum
