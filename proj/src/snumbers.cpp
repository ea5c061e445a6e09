#include "snum/snumbers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snum/bounds.hpp"
#include "snum/linalg.hpp"
#include "snum/lowrank.hpp"
#include "snum/lp.hpp"
#include "snum/oracle.hpp"
#include "snum/rng.hpp"

namespace snum {
namespace {

RankApproxOptions rank_options(const SolverSettings& s) {
  RankApproxOptions o;
  o.restarts = s.restarts;
  o.seed = s.seed;
  o.max_iters = s.max_iters;
  o.vertex_cap = s.vertex_cap;
  o.threads = s.threads;
  if (s.oracle_refine) {
    o.restarts = 10 * s.restarts;
    o.structured = true;
    o.polish = true;
    o.kicks = 3;
    o.max_iters = std::max(60, s.max_iters);
  }
  return o;
}

BoundOptions bound_options(const SolverSettings& s) {
  BoundOptions b;
  b.seed = s.seed;
  b.vertex_cap = s.vertex_cap;
  if (s.oracle_refine) {
    b.restarts = 12;
    b.iters = 300;
  }
  return b;
}

void check_index(SKind kind, const LinearOperator& t, int n) {
  const int hi = max_index(kind, t);
  if (n < 1 || n > hi)
    throw Error(ErrorCode::index_out_of_range,
                to_string(kind) + " number index " + std::to_string(n) + " outside 1.." + std::to_string(hi));
}

SNumberValue make_value(SKind kind, int n) {
  SNumberValue v;
  v.kind = kind;
  v.n = n;
  return v;
}

// Rank-(n-1) SVD truncation and the matching subspaces.
SNumberValue svd_value(SKind kind, const LinearOperator& t, int n, Method method) {
  const SvdResult s = svd(t.matrix());
  SNumberValue v = make_value(kind, n);
  const Eigen::Index k = std::min<Eigen::Index>(n - 1, s.values.size());
  const double sigma = n - 1 < s.values.size() ? s.values(n - 1) : 0.0;
  v.approximant = s.u.leftCols(k) * s.values.head(k).asDiagonal() * s.v.leftCols(k).transpose();
  v.frame = s.u.leftCols(k);
  v.functionals = s.v.leftCols(k).transpose();
  v.method = method;
  if (method == Method::hilbert_exact) {
    v.lower = v.upper = sigma;
    v.lower_method = "singular_values";
  }
  return v;
}

NormBracket norm_of(const LinearOperator& t, const SolverSettings& s) {
  NormOptions o;
  o.vertex_cap = s.vertex_cap;
  o.restarts = std::max(16, s.restarts);
  o.seed = s.seed;
  return operator_norm(t, o);
}

// Shared shortcuts: Euclidean pair, n = 1, n beyond the rank.
bool shortcut(SKind kind, const LinearOperator& t, int n, const SolverSettings& s, SNumberValue& out) {
  if (t.hilbert()) {
    out = svd_value(kind, t, n, Method::hilbert_exact);
    return true;
  }
  if (n == 1) {
    out = make_value(kind, 1);
    const NormBracket nb = norm_of(t, s);
    out.lower = nb.lower;
    out.upper = nb.upper;
    out.method = nb.exact ? Method::polyhedral_exact : Method::heuristic;
    out.lower_method = nb.exact ? "exact_norm" : "norm_ascent";
    out.approximant = Matrix::Zero(t.rows(), t.cols());
    out.frame = Matrix(t.rows(), 0);
    out.functionals = Matrix(0, t.cols());
    return true;
  }
  if (n > numerical_rank(t.matrix(), 1e-12)) {
    out = svd_value(kind, t, n, Method::polyhedral_exact);
    out.lower = out.upper = 0.0;
    out.lower_method = "rank";
    return true;
  }
  return false;
}

void finish(SNumberValue& v, const LinearOperator& t, const SolverSettings& s) {
  // A rank-0 approximant is always admissible.
  const NormBracket nb = norm_of(t, s);
  if (nb.upper < v.upper) {
    v.upper = nb.upper;
    v.approximant = Matrix::Zero(t.rows(), t.cols());
    v.frame = Matrix(t.rows(), 0);
    v.functionals = Matrix(0, t.cols());
  }
  // Certified lower bounds may exceed the upper value only by rounding.
  if (v.lower > v.upper && v.lower <= v.upper * (1.0 + 1e-9) + 1e-15) v.lower = v.upper;
  v.lower = std::max(v.lower, 0.0);
  v.method = v.upper - v.lower <= s.tol ? Method::polyhedral_exact : Method::heuristic;
}

void raise_lower(SNumberValue& v, const LowerBound& b) {
  if (b.value > v.lower) {
    v.lower = b.value;
    v.lower_method = b.method;
  }
}

RankApproxResult rank_search(const LinearOperator& t, int k, const SolverSettings& s, double target) {
  RankApproxOptions o = rank_options(s);
  o.target = target;
  return best_rank_approx(t, k, o);
}

// sup{ r^T T x : ||x||_p <= 1, F x = 0 } for p polyhedral, with an optional
// penalty lambda * |F x|_inf replacing the kernel constraint.
double kernel_lp(const Vec& obj, const Matrix& f, NormExp p, double penalty) {
  const Eigen::Index d = obj.size(), k = f.rows();
  const bool use_penalty = penalty > 0.0;
  const Eigen::Index nx = p == NormExp::one ? 2 * d : d;  // x (and s for l1)
  const Eigen::Index nv = nx + (use_penalty ? 1 : 0);
  std::vector<Vec> rows;
  std::vector<double> rhs;
  auto add = [&](Vec row, double b) {
    rows.push_back(std::move(row));
    rhs.push_back(b);
  };
  for (Eigen::Index i = 0; i < k; ++i) {
    Vec r = Vec::Zero(nv);
    r.head(d) = f.row(i).transpose();
    if (use_penalty) r(nx) = -1.0;
    add(r, 0.0);
    Vec r2 = Vec::Zero(nv);
    r2.head(d) = -f.row(i).transpose();
    if (use_penalty) r2(nx) = -1.0;
    add(r2, 0.0);
  }
  if (p == NormExp::inf) {
    for (Eigen::Index j = 0; j < d; ++j) {
      Vec r = Vec::Zero(nv);
      r(j) = 1.0;
      add(r, 1.0);
      r(j) = -1.0;
      add(r, 1.0);
    }
  } else {
    for (Eigen::Index j = 0; j < d; ++j) {
      Vec r = Vec::Zero(nv);
      r(j) = 1.0;
      r(d + j) = -1.0;
      add(r, 0.0);
      r(j) = -1.0;
      add(r, 0.0);
    }
    Vec r = Vec::Zero(nv);
    r.segment(d, d).setOnes();
    add(r, 1.0);
  }
  Matrix g(static_cast<Eigen::Index>(rows.size()), nv);
  Vec h(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    g.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    h(static_cast<Eigen::Index>(i)) = rhs[i];
  }
  Vec c = Vec::Zero(nv);
  c.head(d) = -obj;
  if (use_penalty) c(nx) = penalty;
  const LpResult res = solve_inequality_lp(c, g, h);
  if (res.status != LpStatus::optimal)
    throw Error(ErrorCode::convergence_failure, "Gelfand kernel program not solved");
  return std::max(0.0, -res.objective);
}

struct GelfandEval {
  double kernel = 0.0;
  double epsilon = -1.0;
};

// Exact sup ||Tx||_q over the unit ball intersected with ker F (q polyhedral),
// plus the penalty form when the domain is polyhedral.
GelfandEval gelfand_eval(const LinearOperator& t, const Matrix& f, int cap) {
  const NormExp p = t.domain().p();
  const Matrix duals = extreme_point_matrix(t.codomain().dual(), cap);
  GelfandEval out;
  const Matrix proj = Matrix::Identity(t.cols(), t.cols()) - f.transpose() * f;
  const double penalty = 1e4 * (1.0 + t.matrix().cwiseAbs().maxCoeff()) * t.cols();
  if (p != NormExp::two) out.epsilon = 0.0;
  for (Eigen::Index j = 0; j < duals.cols(); ++j) {
    const Vec obj = t.matrix().transpose() * duals.col(j);
    if (p == NormExp::two) {
      out.kernel = std::max(out.kernel, (proj * obj).norm());
    } else {
      out.kernel = std::max(out.kernel, kernel_lp(obj, f, p, 0.0));
      out.epsilon = std::max(out.epsilon, kernel_lp(obj, f, p, penalty));
    }
  }
  return out;
}

// max_j ||p_j - U U^T p_j||^2 for orthonormal U.
double euclid_spread(const Matrix& pts, const Matrix& u) {
  const Matrix r = pts - u * (u.transpose() * pts);
  return r.colwise().squaredNorm().maxCoeff();
}

Matrix orthonormalize(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

// Pads `g` to k orthonormal columns (a larger subspace is never worse).
Matrix pad_frame(const Matrix& g, int k) {
  const int m = static_cast<int>(g.rows());
  k = std::min(k, m);
  if (g.cols() >= k) return g;
  Matrix out(m, k);
  out.leftCols(g.cols()) = g;
  const Matrix comp = g.cols() ? null_space(g.transpose()) : Matrix(Matrix::Identity(m, m));
  out.rightCols(k - g.cols()) = comp.leftCols(k - g.cols());
  return out;
}

// Trust-region sequential LP on the Grassmannian for min_U max_j dist(p_j, span U)
// in l2. Returns the improved orthonormal frame.
Matrix polish_euclid_frame(const Matrix& pts, Matrix u, int max_steps) {
  if (u.cols() == 0 || pts.cols() == 0) return u;
  const Eigen::Index m = u.rows(), k = u.cols(), nv = m * k + 1, np = pts.cols();
  double f = euclid_spread(pts, u);
  double rho = 0.1;
  for (int step = 0; step < max_steps && rho > 1e-14 && f > 0.0; ++step) {
    const Matrix perp = Matrix::Identity(m, m) - u * u.transpose();
    Matrix g = Matrix::Zero(np + 2 * (nv - 1), nv);
    Vec h = Vec::Zero(g.rows());
    // Model in scaled variables: delta = rho * e with |e_i| <= 1, t = f + rho * s.
    for (Eigen::Index j = 0; j < np; ++j) {
      const Vec p = pts.col(j);
      const Matrix grad = -2.0 * (perp * p) * (p.transpose() * u);
      g.row(j).head(nv - 1) = Eigen::Map<const Vec>(grad.data(), nv - 1).transpose();
      g(j, nv - 1) = -1.0;
      h(j) = (f - (perp * p).squaredNorm()) / rho;
    }
    for (Eigen::Index i = 0; i < nv - 1; ++i) {
      g(np + 2 * i, i) = 1.0;
      g(np + 2 * i + 1, i) = -1.0;
      h(np + 2 * i) = h(np + 2 * i + 1) = 1.0;
    }
    Vec c = Vec::Zero(nv);
    c(nv - 1) = 1.0;
    LpResult lp;
    try {
      lp = solve_inequality_lp(c, g, h);
    } catch (const Error&) {
      break;
    }
    if (lp.status != LpStatus::optimal) break;
    const double pred = -rho * lp.x(nv - 1);
    if (pred <= 1e-16 * (1.0 + f)) break;
    const Matrix delta = rho * Eigen::Map<const Matrix>(lp.x.data(), m, k);
    const Matrix cand = orthonormalize(u + delta);
    const double fc = euclid_spread(pts, cand);
    const double gain = f - fc;
    if (gain > 0.1 * pred) {
      u = cand;
      f = fc;
      if (gain > 0.75 * pred) rho = std::min(1.0, 2.0 * rho);
    } else {
      rho *= 0.25;
    }
  }
  return u;
}

int per_edge_for(int dim, double target_cos) {
  if (dim <= 1) return 2;
  for (int k = 2; k < 4096; ++k) {
    const double h = 2.0 / (k - 1);
    const double sin_bound = 0.5 * h * std::sqrt(static_cast<double>(dim - 1));
    if (sin_bound < 1.0 && std::sqrt(1.0 - sin_bound * sin_bound) >= target_cos) return k;
  }
  return 4096;
}

}  // namespace

std::string to_string(SKind k) {
  switch (k) {
    case SKind::approximation: return "approximation";
    case SKind::kolmogorov: return "kolmogorov";
    case SKind::gelfand: return "gelfand";
    case SKind::symmetrized: return "symmetrized";
  }
  return "unknown";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::hilbert_exact: return "hilbert_exact";
    case Method::polyhedral_exact: return "polyhedral_exact";
    case Method::heuristic: return "heuristic";
  }
  return "unknown";
}

SKind parse_skind(std::string_view text) {
  if (text == "a" || text == "approximation") return SKind::approximation;
  if (text == "d" || text == "kolmogorov") return SKind::kolmogorov;
  if (text == "c" || text == "gelfand") return SKind::gelfand;
  if (text == "tau" || text == "symmetrized") return SKind::symmetrized;
  throw Error(ErrorCode::invalid_argument, "unknown s-number kind '" + std::string(text) + "'");
}

void SolverSettings::validate() const {
  if (restarts < 1) throw Error(ErrorCode::invalid_argument, "restarts must be positive");
  if (max_iters < 1) throw Error(ErrorCode::invalid_argument, "max_iters must be positive");
  if (!(tol > 0.0)) throw Error(ErrorCode::invalid_argument, "tol must be positive");
  if (threads < 0) throw Error(ErrorCode::invalid_argument, "threads must be non-negative");
  if (vertex_cap < 1 || vertex_cap > 24) throw Error(ErrorCode::invalid_argument, "vertex_cap must lie in 1..24");
  if (!(net_tolerance > 0.0)) throw Error(ErrorCode::invalid_argument, "net_tolerance must be positive");
  if (net_cap < 1) throw Error(ErrorCode::invalid_argument, "net_cap must be positive");
}

int max_index(SKind kind, const LinearOperator& t) {
  switch (kind) {
    case SKind::kolmogorov: return t.rows() + 1;
    case SKind::gelfand: return t.cols() + 1;
    default: return std::min(t.rows(), t.cols()) + 1;
  }
}

SNumberValue approximation_impl(const LinearOperator& t, int n, const SolverSettings& s) {
  check_index(SKind::approximation, t, n);
  SNumberValue v;
  if (shortcut(SKind::approximation, t, n, s, v)) return v;
  v = make_value(SKind::approximation, n);
  raise_lower(v, s_number_lower(t, n, bound_options(s)));
  if (s.oracle_refine && t.rows() <= 6 && t.cols() <= 6 && n <= 3) {
    OracleBudget b;
    b.restarts = 10 * s.restarts;
    b.seed = s.seed;
    b.threads = s.threads;
    b.target = v.lower + s.tol;
    const OracleResult r = brute_rank_approx(t, n, b);
    v.upper = r.value;
    v.approximant = r.witness;
  } else {
    const RankApproxResult r = rank_search(t, n - 1, s, v.lower + s.tol);
    v.upper = r.value;
    v.approximant = r.a;
  }
  finish(v, t, s);
  return v;
}

SNumberValue kolmogorov_impl(const LinearOperator& t, int n, const SolverSettings& s) {
  check_index(SKind::kolmogorov, t, n);
  SNumberValue v;
  if (shortcut(SKind::kolmogorov, t, n, s, v)) return v;
  if (n > t.rows()) {
    v = svd_value(SKind::kolmogorov, t, n, Method::polyhedral_exact);
    v.frame = Matrix::Identity(t.rows(), t.rows());
    return v;
  }
  v = make_value(SKind::kolmogorov, n);
  const BoundOptions bo = bound_options(s);
  raise_lower(v, s_number_lower(t, n, bo));
  const NormExp q = t.codomain().p();
  if (t.domain().polyhedral()) {
    const Matrix ext = extreme_point_matrix(t.domain(), s.vertex_cap);
    const LinearOperator w(t.matrix() * ext, NormedSpace(static_cast<int>(ext.cols()), NormExp::one), t.codomain());
    raise_lower(v, s_number_lower(w, n, bo));
    // Subspaces from the lifted problem and from a rank search on T itself.
    const RankApproxResult rw = rank_search(w, n - 1, s, v.lower + s.tol);
    const RankApproxResult rt = rank_search(t, n - 1, s, v.lower + s.tol);
    v.upper = std::numeric_limits<double>::infinity();
    std::vector<Matrix> cands{orthonormal_basis(rw.u, 1e-10), orthonormal_basis(rt.u, 1e-10)};
    if (q == NormExp::two) {
      const int steps = s.oracle_refine ? 800 : 300;
      for (size_t i = 0, c = cands.size(); i < c; ++i)
        cands.push_back(polish_euclid_frame(w.matrix(), pad_frame(cands[i], n - 1), steps));
    }
    for (const Matrix& g : cands) {
      double worst = 0.0;
      for (Eigen::Index j = 0; j < w.matrix().cols(); ++j)
        worst = std::max(worst, lp_distance(w.matrix().col(j), g, q).value);
      if (worst < v.upper) {
        v.upper = worst;
        v.frame = g;
      }
    }
  } else {
    // Euclidean domain: project onto candidate subspaces.
    const RankApproxResult r = rank_search(t, n - 1, s, v.lower + s.tol);
    v.upper = r.value;
    v.frame = orthonormal_basis(r.u, 1e-10);
    const SvdResult sv = svd(t.matrix());
    for (const Matrix& cand : {Matrix(orthonormal_basis(r.u, 1e-10)), Matrix(sv.u.leftCols(n - 1))}) {
      const Matrix resid = t.matrix() - cand * (cand.transpose() * t.matrix());
      const double val = exact_operator_norm(resid, NormExp::two, q, s.vertex_cap);
      if (val < v.upper) {
        v.upper = val;
        v.frame = cand;
      }
    }
  }
  finish(v, t, s);
  return v;
}

SNumberValue gelfand_impl(const LinearOperator& t, int n, const SolverSettings& s) {
  check_index(SKind::gelfand, t, n);
  SNumberValue v;
  if (shortcut(SKind::gelfand, t, n, s, v)) return v;
  if (n > t.cols()) {
    v = svd_value(SKind::gelfand, t, n, Method::polyhedral_exact);
    v.functionals = Matrix::Identity(t.cols(), t.cols());
    return v;
  }
  v = make_value(SKind::gelfand, n);
  const BoundOptions bo = bound_options(s);
  raise_lower(v, s_number_lower(t, n, bo));
  if (t.codomain().polyhedral()) {
    const Matrix duals = extreme_point_matrix(t.codomain().dual(), s.vertex_cap);
    const LinearOperator w(t.matrix().transpose() * duals, NormedSpace(static_cast<int>(duals.cols()), NormExp::one),
                           t.domain().dual());
    raise_lower(v, s_number_lower(w, n, bo));
    // Functionals from the dual lifted problem and from a rank search on T (rows of Y).
    const RankApproxResult rw = rank_search(w, n - 1, s, v.lower + s.tol);
    const RankApproxResult rt = rank_search(t, n - 1, s, v.lower + s.tol);
    v.upper = std::numeric_limits<double>::infinity();
    std::vector<Matrix> cands{orthonormal_basis(rw.u, 1e-10).transpose(),
                              orthonormal_basis(rt.y.transpose(), 1e-10).transpose()};
    if (t.domain().p() == NormExp::two) {
      const int steps = s.oracle_refine ? 800 : 300;
      for (size_t i = 0, c = cands.size(); i < c; ++i)
        cands.push_back(
            polish_euclid_frame(w.matrix(), pad_frame(cands[i].transpose(), n - 1), steps).transpose());
    }
    for (const Matrix& f : cands) {
      const GelfandEval e = gelfand_eval(t, f, s.vertex_cap);
      const double val = std::max(e.kernel, e.epsilon);
      if (val < v.upper) {
        v.upper = val;
        v.kernel_value = e.kernel;
        v.epsilon_value = e.epsilon;
        v.functionals = f;
        v.consistent = e.epsilon < 0.0 || std::abs(e.epsilon - e.kernel) <= 1e-6 * (1.0 + e.kernel);
      }
    }
  } else {
    // Euclidean codomain: ||T restricted to ker F|| <= ||T P_ker F||.
    const RankApproxResult r = rank_search(t, n - 1, s, v.lower + s.tol);
    v.upper = r.value;
    v.functionals = orthonormal_basis(r.y.transpose(), 1e-10).transpose();
    const SvdResult sv = svd(t.matrix());
    for (const Matrix& cand :
         {Matrix(orthonormal_basis(r.y.transpose(), 1e-10).transpose()), Matrix(sv.v.leftCols(n - 1).transpose())}) {
      const Matrix proj = Matrix::Identity(t.cols(), t.cols()) - cand.transpose() * cand;
      const double val = exact_operator_norm(t.matrix() * proj, t.domain().p(), NormExp::two, s.vertex_cap);
      if (val < v.upper) {
        v.upper = val;
        v.functionals = cand;
      }
    }
    v.kernel_value = v.upper;
  }
  finish(v, t, s);
  return v;
}

SphereNet sphere_net(int dim, int per_edge) {
  SphereNet net;
  if (dim == 1) {
    net.points = Matrix::Ones(1, 1);
    return net;
  }
  const double h = 2.0 / (per_edge - 1);
  std::vector<Vec> pts;
  // Faces x_f = +1 only (the -1 faces are the negated set); points shared by
  // several +1 faces are kept once by requiring every earlier coordinate < 1.
  std::vector<int> idx(static_cast<size_t>(dim - 1), 0);
  for (int face = 0; face < dim; ++face) {
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      Vec x(dim);
      int c = 0;
      bool keep = true;
      for (int i = 0; i < dim; ++i) {
        if (i == face) {
          x(i) = 1.0;
          continue;
        }
        x(i) = -1.0 + h * idx[static_cast<size_t>(c++)];
        if (i < face && x(i) > 1.0 - 1e-12) keep = false;
      }
      if (keep) pts.push_back(x / x.norm());
      int pos = 0;
      while (pos < dim - 1 && ++idx[static_cast<size_t>(pos)] == per_edge) idx[static_cast<size_t>(pos++)] = 0;
      if (pos == dim - 1) break;
    }
  }
  net.points.resize(dim, static_cast<Eigen::Index>(pts.size()));
  for (size_t j = 0; j < pts.size(); ++j) net.points.col(static_cast<Eigen::Index>(j)) = pts[j];
  const double sin_bound = 0.5 * h * std::sqrt(static_cast<double>(dim - 1));
  net.cos_angle = sin_bound < 1.0 ? std::sqrt(1.0 - sin_bound * sin_bound) : 0.0;
  return net;
}

SNumberValue symmetrized_impl(const LinearOperator& t, int n, const SolverSettings& s) {
  check_index(SKind::symmetrized, t, n);
  if (t.hilbert()) return svd_value(SKind::symmetrized, t, n, Method::hilbert_exact);
  if (!t.polyhedral() && !s.net_mode)
    throw Error(ErrorCode::not_polyhedral, "symmetrized number needs l1/linf spaces or net mode");
  const int netted = (t.domain().polyhedral() ? 0 : 1) + (t.codomain().polyhedral() ? 0 : 1);
  const double target_cos = std::pow(1.0 + s.net_tolerance, -1.0 / std::max(1, netted));
  auto side = [&](const NormedSpace& sp, double& cos_angle) -> Matrix {
    if (sp.polyhedral()) return extreme_point_matrix(sp, s.vertex_cap);
    const int k = per_edge_for(sp.dim(), target_cos);
    SphereNet net = sphere_net(sp.dim(), k);
    if (net.points.cols() > s.net_cap || net.cos_angle < target_cos)
      throw Error(ErrorCode::net_too_coarse, "net for dimension " + std::to_string(sp.dim()) + " needs " +
                                                 std::to_string(net.points.cols()) + " points, cap is " +
                                                 std::to_string(s.net_cap));
    cos_angle = net.cos_angle;
    return net.points;
  };
  double cos_x = 1.0, cos_y = 1.0;
  const Matrix sx = side(t.domain(), cos_x);
  const Matrix sy = side(t.codomain().dual(), cos_y);
  const Matrix m = sy.transpose() * t.matrix() * sx;
  const LinearOperator surrogate(m, NormedSpace(static_cast<int>(m.cols()), NormExp::one),
                                 NormedSpace(static_cast<int>(m.rows()), NormExp::inf));
  SNumberValue a = approximation_number(surrogate, n, s);
  SNumberValue v = make_value(SKind::symmetrized, n);
  v.approximant = a.approximant;
  v.lower = a.lower;
  v.lower_method = a.lower_method;
  if (netted > 0) {
    v.upper = a.upper / (cos_x * cos_y);
    v.method = Method::heuristic;
    return v;
  }
  v.upper = a.upper;
  // The same number as a Kolmogorov number of J_Y T and a Gelfand number of T Q_X.
  const SNumberValue d = kolmogorov_number(
      LinearOperator(sy.transpose() * t.matrix(), t.domain(), NormedSpace(static_cast<int>(sy.cols()), NormExp::inf)),
      n, s);
  const SNumberValue c = gelfand_number(
      LinearOperator(t.matrix() * sx, NormedSpace(static_cast<int>(sx.cols()), NormExp::one), t.codomain()), n, s);
  for (const SNumberValue* o : {&d, &c}) {
    if (o->lower > v.lower) {
      v.lower = o->lower;
      v.lower_method = o->lower_method;
    }
    v.upper = std::min(v.upper, o->upper);
  }
  const double hi = std::max({a.upper, d.upper, c.upper});
  const double lo = std::min({a.upper, d.upper, c.upper});
  v.spread = hi - lo;
  v.consistent = std::max({a.lower, d.lower, c.lower}) <= lo + 1e-6 * (1.0 + lo);
  if (v.lower > v.upper && v.lower <= v.upper * (1.0 + 1e-9) + 1e-15) v.lower = v.upper;
  v.method = v.upper - v.lower <= s.tol ? Method::polyhedral_exact : Method::heuristic;
  return v;
}

namespace {

using Impl = SNumberValue (*)(const LinearOperator&, int, const SolverSettings&);

// Default effort first; the refined search runs only when the bracket is still open.
SNumberValue solve_adaptive(Impl impl, const LinearOperator& t, int n, const SolverSettings& s) {
  s.validate();
  if (!s.oracle_refine) return impl(t, n, s);
  SolverSettings base = s;
  base.oracle_refine = false;
  SNumberValue v = impl(t, n, base);
  if (v.method == Method::hilbert_exact || v.width() <= s.tol) return v;
  SNumberValue r = impl(t, n, s);
  if (v.upper < r.upper) {
    r.upper = v.upper;
    r.approximant = v.approximant;
    r.frame = v.frame;
    r.functionals = v.functionals;
    r.kernel_value = v.kernel_value;
    r.epsilon_value = v.epsilon_value;
  }
  if (v.lower > r.lower) {
    r.lower = v.lower;
    r.lower_method = v.lower_method;
  }
  r.method = r.upper - r.lower <= s.tol ? Method::polyhedral_exact : Method::heuristic;
  return r;
}

}  // namespace

SNumberValue approximation_number(const LinearOperator& t, int n, const SolverSettings& s) {
  return solve_adaptive(&approximation_impl, t, n, s);
}
SNumberValue kolmogorov_number(const LinearOperator& t, int n, const SolverSettings& s) {
  return solve_adaptive(&kolmogorov_impl, t, n, s);
}
SNumberValue gelfand_number(const LinearOperator& t, int n, const SolverSettings& s) {
  return solve_adaptive(&gelfand_impl, t, n, s);
}
SNumberValue symmetrized_number(const LinearOperator& t, int n, const SolverSettings& s) {
  return solve_adaptive(&symmetrized_impl, t, n, s);
}

SNumberValue s_number(SKind kind, const LinearOperator& t, int n, const SolverSettings& s) {
  switch (kind) {
    case SKind::approximation: return approximation_number(t, n, s);
    case SKind::kolmogorov: return kolmogorov_number(t, n, s);
    case SKind::gelfand: return gelfand_number(t, n, s);
    case SKind::symmetrized: return symmetrized_number(t, n, s);
  }
  throw Error(ErrorCode::invalid_argument, "unknown kind");
}

std::vector<SNumberValue> s_number_profile(SKind kind, const LinearOperator& t, int max_n, const SolverSettings& s) {
  std::vector<SNumberValue> out;
  for (int n = 1; n <= max_n; ++n) out.push_back(s_number(kind, t, n, s));
  for (size_t i = 1; i < out.size(); ++i) {
    if (out[i].upper > out[i - 1].upper) {
      out[i].upper = out[i - 1].upper;
      out[i].approximant = out[i - 1].approximant;
      out[i].frame = out[i - 1].frame;
      out[i].functionals = out[i - 1].functionals;
    }
  }
  for (size_t i = out.size(); i-- > 1;) {
    if (out[i].lower > out[i - 1].lower) {
      out[i - 1].lower = out[i].lower;
      out[i - 1].lower_method = out[i].lower_method;
    }
  }
  for (auto& v : out)
    if (v.method != Method::hilbert_exact)
      v.method = v.upper - v.lower <= s.tol ? Method::polyhedral_exact : Method::heuristic;
  return out;
}

std::vector<SNumberValue> hilbert_profile(const LinearOperator& t) {
  if (!t.hilbert()) throw Error(ErrorCode::not_hilbert, "hilbert_profile needs l2 domain and codomain");
  std::vector<SNumberValue> out;
  const int r = std::min(t.rows(), t.cols());
  for (int n = 1; n <= r; ++n) out.push_back(svd_value(SKind::approximation, t, n, Method::hilbert_exact));
  return out;
}

}  // namespace snum

// ---------------------------------------------------------------------------

namespace snum {
namespace {

void record(AxiomCheck& c, double upper_lhs, double lower_rhs, double lower_lhs, double upper_rhs,
            const std::string& where) {
  ++c.instances;
  const double slack = upper_lhs - lower_rhs;
  if (slack > c.slack) {
    c.slack = slack;
    c.worst = where;
  }
  c.certified_violation = std::max(c.certified_violation, lower_lhs - upper_rhs);
}

Matrix random_operator(Rng& rng, int m, int d) { return rng.normal_matrix(m, d); }

}  // namespace

bool AxiomReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.pass; });
}

AxiomReport axiom_suite(SKind kind, int instance_count, const AxiomDims& dims, const SolverSettings& s, double tol) {
  if (kind == SKind::symmetrized)
    throw Error(ErrorCode::invalid_argument, "axiom_suite covers approximation, Kolmogorov and Gelfand numbers");
  if (instance_count < 0 || dims.max_dim < 1)
    throw Error(ErrorCode::invalid_argument, "axiom_suite: bad instance count or dimension");
  AxiomReport rep;
  rep.kind = kind;
  rep.tol = tol;
  AxiomCheck calib{"norm_calibration"}, mono{"monotonicity"}, add{"additivity"}, ideal{"ideal_property"},
      rank{"rank_property"}, norm1{"normalization"}, cont{"continuity"};
  std::vector<AxiomCheck*> all{&calib, &mono, &add, &ideal, &rank, &norm1, &cont};
  for (int inst = 0; inst < instance_count; ++inst) {
    // Checks are evaluated at default effort first and the instance is redone with
    // oracle refinement only when one of its checks is still outside tol.
    auto run = [&](const SolverSettings& si, std::vector<AxiomCheck>& out, double& literal) {
      AxiomCheck calib{"norm_calibration"}, mono{"monotonicity"}, add{"additivity"}, ideal{"ideal_property"},
          rank{"rank_property"}, norm1{"normalization"}, cont{"continuity"};
      Rng rng = Rng::stream(s.seed ^ 0xA710Full, static_cast<std::uint64_t>(inst));
      const int m = rng.uniform_int(1, dims.max_dim), d = rng.uniform_int(1, dims.max_dim);
      const NormedSpace x(d, dims.p), y(m, dims.q);
      const LinearOperator t(random_operator(rng, m, d), x, y);
      const LinearOperator sop(random_operator(rng, m, d), x, y);
      const int top = max_index(kind, t);
      const std::string tag = "instance " + std::to_string(inst) + " (" + std::to_string(m) + "x" + std::to_string(d) + ")";
      const std::vector<SNumberValue> pt = s_number_profile(kind, t, top, si);
      const std::vector<SNumberValue> ps = s_number_profile(kind, sop, top, si);
      auto at = [](const std::vector<SNumberValue>& p, int n) -> const SNumberValue& { return p[static_cast<size_t>(n - 1)]; };

      // (1) s_1 = ||T|| and s_{n+1} <= s_n.
      NormOptions no;
      no.vertex_cap = si.vertex_cap;
      const NormBracket nt = operator_norm(t, no);
      record(calib, at(pt, 1).upper, nt.lower, at(pt, 1).lower, nt.upper, tag);
      record(calib, nt.upper, at(pt, 1).lower, nt.lower, at(pt, 1).upper, tag);
      for (int n = 1; n < top; ++n)
        record(mono, at(pt, n + 1).upper, at(pt, n).lower, at(pt, n + 1).lower, at(pt, n).upper,
               tag + " n=" + std::to_string(n));

      // (2) s_{a+b-1}(S+T) <= s_a(S) + s_b(T).
      const int a = rng.uniform_int(1, top);
      const int b = rng.uniform_int(1, top - a + 1);
      const LinearOperator sum = t.with_matrix(t.matrix() + sop.matrix());
      const SNumberValue lhs = s_number(kind, sum, a + b - 1, si);
      record(add, lhs.upper, at(ps, a).lower + at(pt, b).lower, lhs.lower, at(ps, a).upper + at(pt, b).upper,
             tag + " m=" + std::to_string(a) + " n=" + std::to_string(b));
      literal = std::max(literal, lhs.upper - (at(pt, a).lower + at(pt, b).lower));

      // (3) s_n(R T K) <= ||R|| s_n(T) ||K||.
      const int n3 = rng.uniform_int(1, top);
      const LinearOperator r(random_operator(rng, m, m), y, y), k(random_operator(rng, d, d), x, x);
      const NormBracket nr = operator_norm(r, no), nk = operator_norm(k, no);
      const SNumberValue rtk = s_number(kind, t.with_matrix(r.matrix() * t.matrix() * k.matrix()), n3, si);
      record(ideal, rtk.upper, nr.lower * at(pt, n3).lower * nk.lower, rtk.lower,
             nr.upper * at(pt, n3).upper * nk.upper, tag + " n=" + std::to_string(n3));

      // (4) rank(T) < n implies s_n(T) = 0.
      if (top >= 2) {
        const int n4 = rng.uniform_int(2, top);
        const int rk = rng.uniform_int(0, n4 - 1);
        const Matrix low = random_operator(rng, m, rk) * random_operator(rng, rk, d);
        const SNumberValue z = s_number(kind, t.with_matrix(low), n4, si);
        record(rank, z.upper, 0.0, z.lower, 0.0, tag + " rank=" + std::to_string(rk));
      }

      // (5) s_n(I_n) = 1 on l2^n, and in the instance geometry when it is an endomorphism.
      const int n5 = rng.uniform_int(1, dims.max_dim);
      for (NormExp p : {NormExp::two, dims.p}) {
        if (p != NormExp::two && dims.p != dims.q) continue;
        const LinearOperator id(Matrix::Identity(n5, n5), NormedSpace(n5, p), NormedSpace(n5, p));
        const SNumberValue one = s_number(kind, id, n5, si);
        record(norm1, one.upper, 1.0, one.lower, 1.0, tag + " identity dim=" + std::to_string(n5));
        record(norm1, 1.0, one.lower, 1.0, one.upper, tag + " identity dim=" + std::to_string(n5));
      }

      // Continuity |s_n(S) - s_n(T)| <= ||S - T||.
      const int n6 = rng.uniform_int(1, top);
      const NormBracket diff = operator_norm(sop.with_matrix(sop.matrix() - t.matrix()), no);
      record(cont, at(ps, n6).upper - at(pt, n6).lower, diff.lower, at(ps, n6).lower - at(pt, n6).upper, diff.upper,
             tag + " n=" + std::to_string(n6));
      record(cont, at(pt, n6).upper - at(ps, n6).lower, diff.lower, at(pt, n6).lower - at(ps, n6).upper, diff.upper,
             tag + " n=" + std::to_string(n6));

      out = {calib, mono, add, ideal, rank, norm1, cont};
    };
    SolverSettings si = s;
    si.seed = s.seed + static_cast<std::uint64_t>(inst);
    si.oracle_refine = false;
    std::vector<AxiomCheck> local;
    double literal = -std::numeric_limits<double>::infinity();
    run(si, local, literal);
    const bool open = std::any_of(local.begin(), local.end(), [&](const AxiomCheck& c) { return c.slack > tol; });
    if (s.oracle_refine && open) {
      si.oracle_refine = true;
      literal = -std::numeric_limits<double>::infinity();
      run(si, local, literal);
    }
    rep.literal_additivity_slack = std::max(rep.literal_additivity_slack, literal);
    for (size_t i = 0; i < all.size(); ++i) {
      AxiomCheck& c = *all[i];
      c.instances += local[i].instances;
      if (local[i].instances > 0 && (c.worst.empty() || local[i].slack > c.slack)) {
        c.slack = local[i].slack;
        c.worst = local[i].worst;
      }
      c.certified_violation = std::max(c.certified_violation, local[i].certified_violation);
    }
  }
  for (AxiomCheck* c : {&calib, &mono, &add, &ideal, &rank, &norm1, &cont}) {
    c->pass = c->instances == 0 || c->slack <= tol;
    rep.checks.push_back(*c);
  }
  return rep;
}

BracketPair compare_brackets(SNumberValue lhs, SNumberValue rhs, double tol) {
  BracketPair out;
  out.separation = std::max(lhs.lower - rhs.upper, rhs.lower - lhs.upper);
  out.pass = out.separation <= tol;
  out.lhs = std::move(lhs);
  out.rhs = std::move(rhs);
  return out;
}

std::vector<DualityRow> duality_report(const LinearOperator& t, int n_max, const SolverSettings& s, double tol) {
  const LinearOperator ts = adjoint(t);
  const int hi = std::min(t.rows(), t.cols()) + 1;
  if (n_max < 1 || n_max > hi)
    throw Error(ErrorCode::index_out_of_range, "duality_report: n_max outside 1.." + std::to_string(hi));
  const bool with_tau = t.polyhedral() || t.hilbert();
  std::vector<DualityRow> rows;
  for (int n = 1; n <= n_max; ++n) {
    DualityRow row;
    row.n = n;
    row.approximation = compare_brackets(approximation_number(t, n, s), approximation_number(ts, n, s), tol);
    const SNumberValue dt = kolmogorov_number(t, n, s), dts = kolmogorov_number(ts, n, s);
    const SNumberValue ct = gelfand_number(t, n, s), cts = gelfand_number(ts, n, s);
    row.kolmogorov = compare_brackets(dt, dts, tol);
    row.gelfand = compare_brackets(ct, cts, tol);
    row.kolmogorov_gelfand = compare_brackets(dts, ct, tol);
    if (with_tau) {
      row.has_symmetrized = true;
      row.symmetrized = compare_brackets(symmetrized_number(t, n, s), symmetrized_number(ts, n, s), tol);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

LinearOperator canonical_injection(int d) {
  return LinearOperator(Matrix::Identity(d, d), NormedSpace(d, NormExp::one), NormedSpace(d, NormExp::inf));
}

namespace {

// Untargeted brute search, so the value only depends on the seed and the budget.
SNumberValue injection_value(const LinearOperator& t, int n, const SolverSettings& s, std::string& transcript) {
  SNumberValue v = make_value(SKind::approximation, n);
  raise_lower(v, s_number_lower(t, n, bound_options(s)));
  OracleBudget b;
  b.seed = s.seed;
  b.threads = s.threads;
  const OracleResult r = brute_rank_approx(t, n, b);
  v.upper = r.value;
  v.approximant = r.witness;
  transcript = r.transcript;
  if (v.lower > v.upper && v.lower <= v.upper * (1.0 + 1e-9) + 1e-15) v.lower = v.upper;
  v.method = v.upper - v.lower <= s.tol ? Method::polyhedral_exact : Method::heuristic;
  return v;
}

}  // namespace

InjectionStudy injection_gap_study(const std::vector<int>& d_list, int n, const SolverSettings& s) {
  s.validate();
  if (n < 1 || n > 3) throw Error(ErrorCode::index_out_of_range, "injection_gap_study: n must lie in 1..3");
  InjectionStudy out;
  for (int d : d_list) {
    if (d < 1 || d > 6) throw Error(ErrorCode::invalid_argument, "injection_gap_study: d must lie in 1..6");
    if (n > d + 1) throw Error(ErrorCode::index_out_of_range, "injection_gap_study: n exceeds d + 1");
    const LinearOperator id = canonical_injection(d);
    InjectionRow row;
    row.d = d;
    row.forward = injection_value(id, n, s, row.forward_transcript);
    row.adjoint = injection_value(adjoint(id), n, s, row.adjoint_transcript);
    row.gap = row.forward.upper - row.adjoint.upper;
    if (row.adjoint.upper > row.forward.upper + s.tol) out.adjoint_dominated = false;
    if (!out.rows.empty() && row.forward.upper + s.tol < out.rows.back().forward.upper) out.monotone_in_d = false;
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace snum
