#include "snum/oracle.hpp"

#include <cmath>
#include <sstream>

#include "snum/errors.hpp"
#include "snum/hash.hpp"
#include "snum/lowrank.hpp"
#include "snum/lp.hpp"

namespace snum {

std::uint64_t OracleResult::transcript_hash() const { return fnv1a64(transcript); }

OracleResult vertex_norm_oracle(const LinearOperator& t, int vertex_cap) {
  if (!t.domain().polyhedral())
    throw Error(ErrorCode::not_polyhedral, "vertex_norm_oracle: domain must be l1 or linf");
  const std::vector<Vector> verts = extreme_points(t.domain(), vertex_cap);
  OracleResult out;
  out.point = Vec::Zero(t.cols());
  long best_index = -1;
  for (size_t i = 0; i < verts.size(); ++i) {
    const double v = norm(t.matrix() * verts[i].coords(), t.codomain().p());
    ++out.cost;
    if (v > out.value || best_index < 0) {
      out.value = v;
      out.point = verts[i].coords();
      best_index = static_cast<long>(i);
    }
  }
  std::ostringstream log;
  log << "vertex_enumeration vertices=" << verts.size() << " argmax=" << best_index
      << " value=" << format_double(out.value);
  out.transcript = log.str();
  return out;
}

OracleResult lp_distance(const Vec& point, const Matrix& frame, NormExp q) {
  OracleResult out;
  const Eigen::Index m = point.size();
  if (frame.cols() > 0 && frame.rows() != m)
    throw Error(ErrorCode::invalid_argument, "lp_distance: frame and point dimensions differ");
  if (frame.cols() == 0) {
    out.value = norm(point, q);
    out.point = Vec();
    out.transcript = "empty_frame value=" + format_double(out.value);
    return out;
  }
  if (numerical_rank(frame, 1e-10) < frame.cols())
    throw Error(ErrorCode::degenerate_frame, "lp_distance: frame columns are linearly dependent");
  const Matrix b = orthonormal_basis(frame, 1e-10);
  const Eigen::Index k = b.cols();
  std::ostringstream log;
  Vec coeffs;
  if (q == NormExp::two) {
    coeffs = b.transpose() * point;
    log << "projection";
  } else {
    // Variables (c, t) for q = inf: min t, -t <= p - Bc <= t.
    // Variables (c, u) for q = 1:   min sum u, -u <= p - Bc <= u.
    const Eigen::Index aux = q == NormExp::inf ? 1 : m;
    Matrix g = Matrix::Zero(2 * m, k + aux);
    Vec h(2 * m);
    g.topLeftCorner(m, k) = -b;
    g.bottomLeftCorner(m, k) = b;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index col = q == NormExp::inf ? k : k + i;
      g(i, col) = -1.0;
      g(m + i, col) = -1.0;
      h(i) = -point(i);
      h(m + i) = point(i);
    }
    Vec c = Vec::Zero(k + aux);
    c.tail(aux).setOnes();
    const LpResult res = solve_inequality_lp(c, g, h);
    if (res.status != LpStatus::optimal)
      throw Error(ErrorCode::convergence_failure, "lp_distance: linear program not solved");
    coeffs = res.x.head(k);
    out.cost = res.iterations;
    log << "simplex pivots=" << res.iterations << " basis=";
    for (int j : res.basis) log << j << ',';
  }
  // Report the exact norm of the residual of the returned point of the span.
  out.value = norm(point - b * coeffs, q);
  out.point = coeffs;
  log << " value=" << format_double(out.value);
  out.transcript = log.str();
  return out;
}

OracleResult brute_rank_approx(const LinearOperator& t, int n, const OracleBudget& budget) {
  if (t.rows() > 6 || t.cols() > 6)
    throw Error(ErrorCode::invalid_argument, "brute_rank_approx: dimensions above 6");
  if (n < 1 || n > 3) throw Error(ErrorCode::index_out_of_range, "brute_rank_approx: n must lie in 1..3");
  RankApproxOptions opts;
  opts.restarts = budget.restarts;
  opts.seed = budget.seed;
  opts.structured = true;
  opts.polish = true;
  opts.kicks = 3;
  opts.max_iters = 60;
  opts.threads = budget.threads;
  opts.max_evaluations = budget.max_evaluations;
  opts.target = budget.target;
  const RankApproxResult r = best_rank_approx(t, n - 1, opts);
  OracleResult out;
  out.value = r.value;
  out.witness = r.a;
  out.cost = r.evaluations;
  out.certified = !r.budget_hit;
  if (t.hilbert()) {
    const SvdResult s = svd(t.matrix());
    const double sigma = n <= s.values.size() ? s.values(n - 1) : 0.0;
    out.self_check_failed = std::abs(out.value - sigma) > 1e-9;
  }
  std::ostringstream log;
  log << "rank_search rank=" << n - 1 << " restarts=" << budget.restarts << " seed=" << budget.seed
      << " starts=" << r.starts << " best_start=" << r.best_start << " value=" << format_double(r.value);
  if (r.budget_hit) log << " budget_exceeded";
  out.transcript = log.str();
  return out;
}

}  // namespace snum
