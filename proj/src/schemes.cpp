#include "snum/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "snum/bounds.hpp"
#include "snum/linalg.hpp"
#include "snum/lowrank.hpp"
#include "snum/oracle.hpp"

namespace snum {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr long kSupportCap = 200000;

int nonzero_rows(const Matrix& f) {
  if (f.size() == 0) return 0;
  const double cut = 1e-12 * std::max(1.0, f.cwiseAbs().maxCoeff());
  int r = 0;
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    if (f.row(i).cwiseAbs().maxCoeff() > cut) ++r;
  return r;
}

bool is_zero(const Matrix& f) { return f.size() == 0 || f.cwiseAbs().maxCoeff() == 0.0; }

// Best n-term approximation error in l_q: drop the n largest magnitudes.
double drop_largest(const Vec& p, int n, NormExp q) {
  std::vector<double> mag(static_cast<size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) mag[static_cast<size_t>(i)] = std::abs(p(i));
  std::sort(mag.begin(), mag.end(), std::greater<>());
  Vec rest = Vec::Zero(p.size());
  for (size_t i = static_cast<size_t>(std::max(n, 0)); i < mag.size(); ++i) rest(static_cast<Eigen::Index>(i)) = mag[i];
  return norm(rest, q);
}

Matrix coordinate_frame(int dim, const std::vector<int>& support) {
  Matrix f = Matrix::Zero(dim, static_cast<Eigen::Index>(support.size()));
  for (size_t k = 0; k < support.size(); ++k) f(support[k], static_cast<Eigen::Index>(k)) = 1.0;
  return f;
}

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > kSupportCap) return r;
  }
  return r;
}

// Calls f(support) for every k-subset of {0..dim-1} in lexicographic order.
template <class F>
void for_each_support(int dim, int k, F&& f) {
  if (binomial(dim, k) > kSupportCap)
    throw Error(ErrorCode::budget_exceeded, "support enumeration over C(" + std::to_string(dim) + "," +
                                                std::to_string(k) + ") subsets exceeds the cap");
  std::vector<int> idx(static_cast<size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<size_t>(i)] == dim - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
  }
}

std::vector<int> complement(int dim, const std::vector<int>& support) {
  std::vector<int> out;
  for (int i = 0; i < dim; ++i)
    if (!std::binary_search(support.begin(), support.end(), i)) out.push_back(i);
  return out;
}

Matrix random_rows(Rng& rng, int dim, int rows, int cols) {
  std::vector<int> idx(static_cast<size_t>(dim));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = dim - 1; i > 0; --i) std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(rng.uniform_int(0, i))]);
  Matrix f = Matrix::Zero(dim, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) f(idx[static_cast<size_t>(r)], c) = rng.normal();
  return f;
}

std::string show(const Matrix& f) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%.4g", j ? " " : "", f(i, j));
      out += buf;
    }
  }
  return out + "]";
}

double max_distance(const Matrix& points, const Matrix& frame, NormExp q) {
  const Matrix basis = orthonormal_basis(frame);
  double r = 0.0;
  for (Eigen::Index j = 0; j < points.cols(); ++j) r = std::max(r, lp_distance(points.col(j), basis, q).value);
  return r;
}

double max_norm(const Matrix& points, NormExp q) {
  double r = 0.0;
  for (Eigen::Index j = 0; j < points.cols(); ++j) r = std::max(r, norm(points.col(j), q));
  return r;
}

void settle(GeneralizedWidth& w, const SolverSettings& s) {
  if (w.lower > w.upper && w.lower <= w.upper * (1.0 + 1e-9) + 1e-15) w.lower = w.upper;
  w.lower = std::max(w.lower, 0.0);
  w.method = w.upper - w.lower <= s.tol ? Method::polyhedral_exact : Method::heuristic;
}

NormBracket norm_bracket(const LinearOperator& t, const SolverSettings& s) {
  NormOptions o;
  o.vertex_cap = s.vertex_cap;
  o.restarts = std::max(16, s.restarts);
  o.seed = s.seed;
  return operator_norm(t, o);
}

// ||P_{S^c} T|| for the rows outside the support.
NormBracket tail_norm(const LinearOperator& t, const std::vector<int>& support, const SolverSettings& s) {
  Matrix m = t.matrix();
  for (int i : support) m.row(i).setZero();
  return norm_bracket(t.with_matrix(m), s);
}

}  // namespace

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::dim_subspaces: return "dim_subspaces";
    case SchemeKind::sparse_support: return "sparse_support";
    case SchemeKind::broken: return "broken";
    case SchemeKind::sequence_lp: return "sequence_lp";
    case SchemeKind::custom: return "custom";
  }
  return "?";
}

SchemeKind parse_scheme_kind(std::string_view text) {
  for (SchemeKind k : {SchemeKind::dim_subspaces, SchemeKind::sparse_support, SchemeKind::broken,
                       SchemeKind::sequence_lp, SchemeKind::custom})
    if (text == to_string(k)) return k;
  throw Error(ErrorCode::parse_error, "unknown scheme '" + std::string(text) + "'");
}

ApproximationScheme dim_subspaces_scheme() {
  ApproximationScheme q;
  q.name = "dim_subspaces";
  q.kind = SchemeKind::dim_subspaces;
  q.member = [](int n, const Matrix& f) { return n >= 0 && (is_zero(f) ? true : numerical_rank(f, 1e-10) <= n); };
  q.best_distance = [](int n, const Vec& p, NormExp qn) { return n >= 1 ? 0.0 : norm(p, qn); };
  q.sample = [](Rng& rng, int n, int dim) -> Matrix {
    const int k = rng.uniform_int(0, std::min(n, dim));
    const int cols = rng.uniform_int(std::max(k, 1), k + 2);
    if (k == 0) return Matrix::Zero(dim, cols);
    return rng.normal_matrix(dim, k) * rng.normal_matrix(k, cols);
  };
  return q;
}

ApproximationScheme sparse_support_scheme() {
  ApproximationScheme q;
  q.name = "sparse_support";
  q.kind = SchemeKind::sparse_support;
  q.member = [](int n, const Matrix& f) { return n >= 0 && nonzero_rows(f) <= n; };
  q.best_distance = [](int n, const Vec& p, NormExp qn) { return drop_largest(p, n, qn); };
  q.sample = [](Rng& rng, int n, int dim) {
    return random_rows(rng, dim, rng.uniform_int(0, std::min(n, dim)), rng.uniform_int(1, 3));
  };
  return q;
}

ApproximationScheme broken_scheme() {
  ApproximationScheme q;
  q.name = "broken";
  q.kind = SchemeKind::broken;
  q.member = [](int n, const Matrix& f) { return nonzero_rows(f) == n; };
  q.best_distance = [](int n, const Vec& p, NormExp qn) {
    return n > p.size() ? kInf : drop_largest(p, n, qn);
  };
  q.sample = [](Rng& rng, int n, int dim) { return random_rows(rng, dim, std::min(n, dim), rng.uniform_int(1, 3)); };
  return q;
}

ApproximationScheme sequence_lp_scheme() {
  ApproximationScheme q;
  q.name = "sequence_lp";
  q.kind = SchemeKind::sequence_lp;
  q.member = [](int n, const Matrix& f) { return n >= 1 || (n == 0 && is_zero(f)); };
  q.best_distance = [](int n, const Vec& p, NormExp qn) { return n >= 1 ? 0.0 : norm(p, qn); };
  q.sample = [](Rng& rng, int n, int dim) -> Matrix {
    const int cols = rng.uniform_int(1, 3);
    return n == 0 ? Matrix::Zero(dim, cols) : rng.normal_matrix(dim, cols);
  };
  return q;
}

ApproximationScheme custom_scheme(std::string name, std::function<bool(int, const Matrix&)> member,
                                  std::function<std::vector<Matrix>(int, int)> candidates,
                                  std::function<Matrix(Rng&, int, int)> sample) {
  if (!member || !candidates || !sample)
    throw Error(ErrorCode::invalid_argument, "custom scheme needs member, candidates and sample callbacks");
  ApproximationScheme q;
  q.name = std::move(name);
  q.kind = SchemeKind::custom;
  q.member = member;
  q.candidates = candidates;
  q.sample = std::move(sample);
  q.best_distance = [member, candidates](int n, const Vec& p, NormExp qn) {
    if (n == 0) return norm(p, qn);
    double best = kInf;
    for (const Matrix& f : candidates(n, static_cast<int>(p.size()))) {
      if (!member(n, f)) continue;
      best = std::min(best, lp_distance(p, orthonormal_basis(f), qn).value);
    }
    return best;
  };
  return q;
}

ApproximationScheme make_scheme(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::dim_subspaces: return dim_subspaces_scheme();
    case SchemeKind::sparse_support: return sparse_support_scheme();
    case SchemeKind::broken: return broken_scheme();
    case SchemeKind::sequence_lp: return sequence_lp_scheme();
    case SchemeKind::custom: break;
  }
  throw Error(ErrorCode::invalid_argument, "custom schemes are built with custom_scheme()");
}

// ---------------------------------------------------------------------------

bool SchemeAxiomReport::all_pass() const {
  return std::all_of(results.begin(), results.end(), [](const SchemeAxiomResult& r) { return r.pass; });
}

SchemeAxiomReport check_scheme_axioms(const ApproximationScheme& q, int trials, std::uint64_t seed,
                                      const SchemeSampling& sampling) {
  if (trials < 0 || sampling.dim < 1 || sampling.n_max < 0)
    throw Error(ErrorCode::invalid_argument, "check_scheme_axioms: bad trial count or sampling range");
  SchemeAxiomResult ga1{"GA1"}, ga2{"GA2"}, ga3{"GA3"};
  auto fail = [](SchemeAxiomResult& r, const std::string& what) {
    if (r.pass) r.counterexample = what;
    r.pass = false;
  };
  const int dim = sampling.dim;
  if (!q.member(0, Matrix::Zero(dim, 1))) fail(ga1, "the zero element is not in Q_0");
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(t));
    const int n = rng.uniform_int(0, sampling.n_max), m = rng.uniform_int(0, sampling.n_max);
    const Matrix a = q.sample(rng, n, dim);
    const Matrix b = q.sample(rng, m, dim);
    const std::string an = "A=" + show(a) + " from Q_" + std::to_string(n);

    ++ga1.trials;
    if (!q.member(n, a)) fail(ga1, an + " is rejected by Q_" + std::to_string(n));
    else if (!q.member(n + 1, a)) fail(ga1, an + " is not in Q_" + std::to_string(n + 1));
    else if (!is_zero(a) && q.member(0, a)) fail(ga1, an + " is nonzero but lies in Q_0");

    ++ga2.trials;
    const double lambdas[] = {0.0, -1.0, rng.uniform(-3.0, 3.0), 1e-3};
    for (double lam : lambdas) {
      if (!q.member(n, lam * a)) {
        fail(ga2, std::to_string(lam) + " * " + an + " is not in Q_" + std::to_string(n));
        break;
      }
    }

    ++ga3.trials;
    Matrix sum(dim, a.cols() + b.cols());
    sum << a, b;
    if (!q.member(n + m, sum))
      fail(ga3, an + " plus B=" + show(b) + " from Q_" + std::to_string(m) + " is not in Q_" + std::to_string(n + m));
  }
  SchemeAxiomReport rep;
  rep.scheme = q.name;
  rep.results = {ga1, ga2, ga3};
  return rep;
}

// ---------------------------------------------------------------------------

bool validate_width(const GeneralizedWidth& w, const Matrix& points, NormExp q, const ApproximationScheme& scheme,
                    double tol) {
  if (!scheme.member(w.n, w.frame)) return false;
  const Matrix basis = orthonormal_basis(w.frame);
  for (Eigen::Index j = 0; j < points.cols(); ++j)
    if (lp_distance(points.col(j), basis, q).value > w.radius + tol * (1.0 + w.radius)) return false;
  return true;
}

GeneralizedWidth generalized_kolmogorov(const Matrix& points, NormExp q, int n, const ApproximationScheme& scheme,
                                        const SolverSettings& s) {
  s.validate();
  if (n < 0) throw Error(ErrorCode::index_out_of_range, "generalized_kolmogorov: n must be >= 0");
  if (!points.allFinite()) throw Error(ErrorCode::invalid_argument, "generalized_kolmogorov: non-finite point");
  const int dim = static_cast<int>(points.rows());
  GeneralizedWidth w;
  w.n = n;
  w.scheme = scheme.name;
  for (Eigen::Index j = 0; j < points.cols(); ++j)
    w.lower = std::max(w.lower, scheme.best_distance(n, points.col(j), q));

  if (n == 0) {
    w.frame = Matrix::Zero(dim, 1);
    w.upper = w.radius = max_norm(points, q);
    w.lower = w.upper;
  } else if (scheme.kind == SchemeKind::dim_subspaces) {
    if (n >= dim || points.cols() == 0) {
      w.frame = Matrix::Identity(dim, std::min(n, dim));
    } else {
      const LinearOperator op(points, NormedSpace(static_cast<int>(points.cols()), NormExp::one), NormedSpace(dim, q));
      const SNumberValue v = kolmogorov_number(op, n + 1, s);
      w.frame = v.frame.cols() ? v.frame : Matrix::Zero(dim, 1);
      w.lower = std::max(w.lower, v.lower);
    }
    w.upper = w.radius = max_distance(points, w.frame, q);
  } else if (scheme.kind == SchemeKind::sparse_support || scheme.kind == SchemeKind::broken) {
    if (scheme.kind == SchemeKind::broken && n > dim)
      throw Error(ErrorCode::invalid_argument, "broken scheme has no member with " + std::to_string(n) + " rows");
    const int k = std::min(n, dim);
    double best = kInf;
    std::vector<int> arg;
    for_each_support(dim, k, [&](const std::vector<int>& sup) {
      const std::vector<int> rest = complement(dim, sup);
      double r = 0.0;
      for (Eigen::Index j = 0; j < points.cols(); ++j) {
        Vec tail = Vec::Zero(dim);
        for (int i : rest) tail(i) = points(i, j);
        r = std::max(r, norm(tail, q));
      }
      if (r < best) {
        best = r;
        arg = sup;
      }
    });
    w.frame = coordinate_frame(dim, arg);
    if (w.frame.cols() == 0) w.frame = Matrix::Zero(dim, 1);
    w.upper = w.radius = best;
    // Exhaustive enumeration: the minimum is attained.
    w.lower = best;
  } else if (scheme.kind == SchemeKind::sequence_lp) {
    w.frame = Matrix::Identity(dim, dim);
    w.upper = w.radius = 0.0;
  } else {
    w.upper = kInf;
    for (const Matrix& f : scheme.candidates(n, dim)) {
      if (f.rows() != dim || !scheme.member(n, f)) continue;
      const double r = max_distance(points, f, q);
      if (r < w.upper) {
        w.upper = r;
        w.frame = f;
      }
    }
    if (!std::isfinite(w.upper)) throw Error(ErrorCode::invalid_argument, "custom scheme proposed no admissible member");
    w.radius = w.upper;
  }
  settle(w, s);
  w.validated = validate_width(w, points, q, scheme);
  return w;
}

GeneralizedWidth generalized_kolmogorov(const LinearOperator& t, int n, const ApproximationScheme& scheme,
                                        const SolverSettings& s) {
  s.validate();
  if (n < 0) throw Error(ErrorCode::index_out_of_range, "generalized_kolmogorov: n must be >= 0");
  const bool poly = t.domain().polyhedral();
  if (poly && scheme.kind != SchemeKind::sparse_support && scheme.kind != SchemeKind::broken &&
      scheme.kind != SchemeKind::dim_subspaces) {
    const Matrix pts = t.matrix() * extreme_point_matrix(t.domain(), s.vertex_cap);
    return generalized_kolmogorov(pts, t.codomain().p(), n, scheme, s);
  }
  const int dim = t.rows();
  GeneralizedWidth w;
  w.n = n;
  w.scheme = scheme.name;
  if (n == 0) {
    const NormBracket nb = norm_bracket(t, s);
    w.frame = Matrix::Zero(dim, 1);
    w.lower = nb.lower;
    w.upper = w.radius = nb.upper;
  } else if (scheme.kind == SchemeKind::dim_subspaces) {
    if (n >= dim) {
      w.frame = Matrix::Identity(dim, dim);
    } else {
      const SNumberValue v = kolmogorov_number(t, n + 1, s);
      w.frame = v.frame.cols() ? v.frame : Matrix::Zero(dim, 1);
      w.lower = v.lower;
      w.upper = w.radius = v.upper;
    }
  } else if (scheme.kind == SchemeKind::sparse_support || scheme.kind == SchemeKind::broken) {
    if (scheme.kind == SchemeKind::broken && n > dim)
      throw Error(ErrorCode::invalid_argument, "broken scheme has no member with " + std::to_string(n) + " rows");
    double best_upper = kInf, best_lower = kInf;
    std::vector<int> arg;
    for_each_support(dim, std::min(n, dim), [&](const std::vector<int>& sup) {
      const NormBracket nb = tail_norm(t, sup, s);
      best_lower = std::min(best_lower, nb.lower);
      if (nb.upper < best_upper) {
        best_upper = nb.upper;
        arg = sup;
      }
    });
    w.frame = coordinate_frame(dim, arg);
    if (w.frame.cols() == 0) w.frame = Matrix::Zero(dim, 1);
    w.lower = best_lower;
    w.upper = w.radius = best_upper;
  } else if (scheme.kind == SchemeKind::sequence_lp) {
    w.frame = Matrix::Identity(dim, dim);
  } else {
    throw Error(ErrorCode::not_polyhedral, "custom scheme widths need a polyhedral domain");
  }
  settle(w, s);
  if (poly) {
    w.validated = validate_width(w, t.matrix() * extreme_point_matrix(t.domain(), s.vertex_cap), t.codomain().p(), scheme);
  } else {
    // Euclidean domain: containment is checked on sampled unit vectors.
    Rng rng(s.seed ^ 0x5A3Dull);
    Matrix x = rng.normal_matrix(t.cols(), 64);
    for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) /= std::max(x.col(j).norm(), 1e-300);
    w.validated = validate_width(w, t.matrix() * x, t.codomain().p(), scheme);
  }
  return w;
}

// ---------------------------------------------------------------------------

SequenceGenerator SequenceGenerator::constant(double c) {
  SequenceGenerator g;
  g.form_ = Form::constant;
  g.a_ = c;
  g.bound_ = std::abs(c);
  return g;
}

SequenceGenerator SequenceGenerator::harmonic() {
  SequenceGenerator g;
  g.form_ = Form::harmonic;
  g.bound_ = 1.0;
  return g;
}

SequenceGenerator SequenceGenerator::geometric(double r) {
  SequenceGenerator g;
  g.form_ = Form::geometric;
  g.a_ = r;
  g.bound_ = std::abs(r) <= 1.0 ? std::abs(r) : kInf;
  return g;
}

SequenceGenerator SequenceGenerator::two_plus_sin() {
  SequenceGenerator g;
  g.form_ = Form::two_plus_sin;
  g.bound_ = 3.0;
  return g;
}

SequenceGenerator SequenceGenerator::random_bounded(double lo, double hi, std::uint64_t seed) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::invalid_argument, "random_bounded needs finite lo <= hi");
  SequenceGenerator g;
  g.form_ = Form::random_bounded;
  g.a_ = lo;
  g.b_ = hi;
  g.seed_ = seed;
  g.bound_ = std::max(std::abs(lo), std::abs(hi));
  return g;
}

SequenceGenerator SequenceGenerator::list(std::vector<double> values, TailRule tail) {
  SequenceGenerator g;
  g.form_ = Form::list;
  g.tail_ = tail;
  g.bound_ = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "sequence list has a non-finite entry");
    g.bound_ = std::max(g.bound_, std::abs(v));
  }
  g.values_ = std::move(values);
  return g;
}

SequenceGenerator& SequenceGenerator::declare_bound(double b) {
  if (!(b >= 0.0)) throw Error(ErrorCode::invalid_argument, "declared bound must be >= 0");
  bound_ = b;
  return *this;
}

double SequenceGenerator::raw(int n) const {
  switch (form_) {
    case Form::constant: return a_;
    case Form::harmonic: return 1.0 / n;
    case Form::geometric: return std::pow(a_, n);
    case Form::two_plus_sin: return 2.0 + std::sin(static_cast<double>(n));
    case Form::random_bounded: return Rng::stream(seed_, static_cast<std::uint64_t>(n)).uniform(a_, b_);
    case Form::list: {
      const size_t k = values_.size();
      const size_t i = static_cast<size_t>(n - 1);
      if (i < k) return values_[i];
      if (k == 0 || tail_ == TailRule::zero) return 0.0;
      if (tail_ == TailRule::repeat_last) return values_.back();
      return values_[i % k];
    }
  }
  return 0.0;
}

double SequenceGenerator::operator()(int n) const {
  if (n < 1) throw Error(ErrorCode::index_out_of_range, "sequence index must be >= 1");
  const double v = raw(n);
  if (!std::isfinite(v) || std::abs(v) > bound_ * (1.0 + 1e-12))
    throw Error(ErrorCode::weight_unbounded, describe() + " at n=" + std::to_string(n) + " exceeds the declared bound");
  return v;
}

std::string SequenceGenerator::describe() const {
  char buf[96];
  switch (form_) {
    case Form::constant: std::snprintf(buf, sizeof buf, "constant(%g)", a_); break;
    case Form::harmonic: return "harmonic";
    case Form::geometric: std::snprintf(buf, sizeof buf, "geometric(%g)", a_); break;
    case Form::two_plus_sin: return "two_plus_sin";
    case Form::random_bounded:
      std::snprintf(buf, sizeof buf, "random_bounded(%g,%g,%llu)", a_, b_, static_cast<unsigned long long>(seed_));
      break;
    case Form::list: {
      const char* tail = tail_ == TailRule::zero ? "zero" : tail_ == TailRule::repeat_last ? "repeat_last" : "cycle";
      std::snprintf(buf, sizeof buf, "list(%zu,%s)", values_.size(), tail);
      break;
    }
  }
  return buf;
}

// ---------------------------------------------------------------------------

bool ShiftDecomposition::certified(double tol) const {
  return residual <= tol && y_sup <= 1.0 && std::isfinite(z_l1);
}

ShiftDecomposition shift_decompose(const std::vector<double>& x, const SequenceGenerator& w, int m, double budget) {
  if (m < 1 || m > 1000) throw Error(ErrorCode::invalid_argument, "shift_decompose: m must lie in 1..1000");
  if (!std::isfinite(w.bound())) throw Error(ErrorCode::weight_unbounded, w.describe() + " has no finite bound");
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "shift_decompose: non-finite entry in x");
    if (std::abs(v) > 1.0) throw Error(ErrorCode::norm_violation, "shift_decompose: ||x||_inf > 1");
  }
  ShiftDecomposition out;
  out.m = m;
  out.x = x;
  const int len = static_cast<int>(x.size());
  out.w.resize(x.size());
  for (int n = 1; n <= len; ++n) {
    const double wn = w(n);
    if (!(wn > 0.0)) throw Error(ErrorCode::invalid_argument, "shift_decompose: weights must be positive");
    out.w[static_cast<size_t>(n - 1)] = wn;
  }
  const size_t outlen = x.empty() ? 0 : x.size() - 1;
  out.y.assign(outlen, 0.0);
  out.z.assign(outlen, 0.0);

  auto image = [&](int n) { return out.x[static_cast<size_t>(n - 1)] * out.w[static_cast<size_t>(n - 1)]; };
  std::vector<char> to_z(static_cast<size_t>(len + 1), 0);
  double total = 0.0;
  for (int n = 2; n <= len; ++n) {
    if (std::ldexp(std::abs(image(n)), m) > 1.0) {
      out.a_set.push_back(n);
      to_z[static_cast<size_t>(n)] = 1;
    } else {
      total += std::abs(image(n));
    }
  }
  const double limit = budget < 0.0 ? total : budget;
  double running = 0.0;
  for (int n = 2; n <= len; ++n) {
    if (to_z[static_cast<size_t>(n)]) continue;
    running += std::abs(image(n));
    if (running > limit) {
      out.subsequence.push_back(n);
      to_z[static_cast<size_t>(n)] = 1;
    }
  }
  for (int n = 2; n <= len; ++n) {
    const size_t k = static_cast<size_t>(n - 2);
    if (to_z[static_cast<size_t>(n)]) {
      out.z[k] = image(n);
    } else {
      out.y[k] = std::ldexp(image(n), m);
    }
  }
  for (int n = 2; n <= len; ++n) {
    const size_t k = static_cast<size_t>(n - 2);
    out.residual = std::max(out.residual, std::abs(image(n) - (std::ldexp(out.y[k], -m) + out.z[k])));
    out.y_sup = std::max(out.y_sup, std::abs(out.y[k]));
    out.z_l1 += std::abs(out.z[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------

ModelOperator ModelOperator::diagonal(SequenceGenerator lambda, NormExp p) {
  ModelOperator op;
  op.family_ = Family::diagonal;
  op.seq_ = std::move(lambda);
  op.dom_ = op.cod_ = p;
  return op;
}

ModelOperator ModelOperator::weighted_shift(SequenceGenerator w, NormExp p) {
  ModelOperator op;
  op.family_ = Family::weighted_shift;
  op.seq_ = std::move(w);
  op.dom_ = op.cod_ = p;
  return op;
}

ModelOperator ModelOperator::canonical_injection() {
  ModelOperator op;
  op.family_ = Family::canonical_injection;
  op.seq_ = SequenceGenerator::constant(1.0);
  op.dom_ = NormExp::one;
  op.cod_ = NormExp::inf;
  return op;
}

ModelOperator ModelOperator::zero(NormExp p) {
  ModelOperator op;
  op.family_ = Family::zero;
  op.dom_ = op.cod_ = p;
  return op;
}

LinearOperator ModelOperator::truncate(int d) const {
  if (d < 1) throw Error(ErrorCode::invalid_argument, "truncate: d must be >= 1");
  Matrix m = Matrix::Zero(d, d);
  switch (family_) {
    case Family::diagonal:
      for (int i = 0; i < d; ++i) m(i, i) = seq_(i + 1);
      break;
    case Family::weighted_shift:
      // B_w e_n = w_n e_{n-1}
      for (int i = 0; i + 1 < d; ++i) m(i, i + 1) = seq_(i + 2);
      break;
    case Family::canonical_injection: m.setIdentity(); break;
    case Family::zero: break;
  }
  return LinearOperator(m, NormedSpace(d, dom_), NormedSpace(d, cod_));
}

std::string ModelOperator::describe() const {
  switch (family_) {
    case Family::diagonal: return "diagonal(" + seq_.describe() + ")";
    case Family::weighted_shift: return "weighted_shift(" + seq_.describe() + ")";
    case Family::canonical_injection: return "canonical_injection";
    case Family::zero: return "zero";
  }
  return "?";
}

// ---------------------------------------------------------------------------

QCompactDiagnostic q_compact_diagnostic(const ModelOperator& model, const ApproximationScheme& scheme, int n_max,
                                        int d, const SolverSettings& s, const DiagnosticOptions& opts) {
  s.validate();
  if (n_max < 0) throw Error(ErrorCode::index_out_of_range, "q_compact_diagnostic: n_max must be >= 0");
  if (opts.samples < 0 || opts.support < 0 || !(opts.threshold >= 0.0))
    throw Error(ErrorCode::invalid_argument, "q_compact_diagnostic: bad options");
  const LinearOperator t = model.truncate(d);
  QCompactDiagnostic out;
  if (scheme.kind == SchemeKind::sequence_lp && model.family() == ModelOperator::Family::weighted_shift) {
    // Plain truncated widths vanish for this scheme; the radius comes from the decomposition.
    out.widths.push_back(generalized_kolmogorov(t, 0, scheme, s));
    const int len = opts.support ? opts.support : d;
    out.samples = opts.samples;
    for (int m = 1; m <= n_max; ++m) {
      GeneralizedWidth w;
      w.n = m;
      w.scheme = scheme.name;
      w.frame = Matrix::Identity(d, d);
      for (int k = 0; k < opts.samples; ++k) {
        Rng rng = Rng::stream(s.seed ^ 0xD3C0ull, static_cast<std::uint64_t>(k));
        std::vector<double> x(static_cast<size_t>(len));
        for (double& v : x) v = rng.uniform() < 0.2 ? (rng.uniform() < 0.5 ? -1.0 : 1.0) : rng.uniform(-1.0, 1.0);
        const ShiftDecomposition dec = shift_decompose(x, model.sequence(), m);
        if (!dec.certified()) out.certificates_ok = false;
        w.radius = std::max(w.radius, dec.radius());
      }
      w.upper = std::ldexp(1.0, -m);
      w.validated = out.certificates_ok && w.radius <= w.upper;
      w.method = Method::heuristic;
      out.widths.push_back(w);
    }
  } else {
    for (int n = 0; n <= n_max; ++n) out.widths.push_back(generalized_kolmogorov(t, n, scheme, s));
  }
  const double base = out.widths.front().upper;
  for (size_t i = 1; i < out.widths.size(); ++i) {
    GeneralizedWidth& cur = out.widths[i];
    const GeneralizedWidth& prev = out.widths[i - 1];
    if (cur.upper > prev.upper + 1e-9 * (1.0 + base)) out.monotone = false;
    // Q_{n-1} is contained in Q_n, so the previous witness stays admissible.
    if (cur.upper > prev.upper) {
      cur.upper = prev.upper;
      cur.radius = prev.radius;
      cur.frame = prev.frame;
    }
  }
  out.evidence = out.monotone && out.certificates_ok && out.widths.back().upper <= opts.threshold * base;
  out.verdict = out.evidence ? "Q-compact-evidence" : "inconclusive";
  return out;
}

GammaTable gamma_estimate(const ModelOperator& model, const std::vector<int>& d_list, const std::vector<int>& n_list,
                          const SolverSettings& s) {
  s.validate();
  if (d_list.empty() || n_list.empty()) throw Error(ErrorCode::invalid_argument, "gamma_estimate: empty grid");
  GammaTable g;
  g.d_list = d_list;
  g.n_list = n_list;
  for (int d : d_list) {
    const LinearOperator t = model.truncate(d);
    std::vector<SNumberValue> row;
    for (int n : n_list) {
      if (n < 1) throw Error(ErrorCode::index_out_of_range, "gamma_estimate: n must be >= 1");
      if (n > d) {
        SNumberValue v;
        v.kind = SKind::kolmogorov;
        v.n = n;
        v.method = Method::polyhedral_exact;
        v.lower_method = "rank";
        v.frame = Matrix::Identity(d, d);
        row.push_back(v);
      } else {
        row.push_back(kolmogorov_number(t, n, s));
      }
    }
    g.values.push_back(std::move(row));
  }
  const double slack = 1e-6;
  for (size_t i = 0; i < g.values.size(); ++i)
    for (size_t j = 0; j + 1 < g.values[i].size(); ++j)
      if (n_list[j] <= n_list[j + 1] && g.values[i][j + 1].lower > g.values[i][j].upper + slack) g.monotone_in_n = false;
  for (size_t i = 0; i + 1 < g.values.size(); ++i)
    for (size_t j = 0; j < n_list.size(); ++j)
      if (d_list[i] <= d_list[i + 1] && g.values[i][j].lower > g.values[i + 1][j].upper + slack) g.monotone_in_d = false;
  g.estimate = g.values.back().back().upper;
  return g;
}

// ---------------------------------------------------------------------------

SNumberValue scheme_approximation_number(const LinearOperator& t, int n, const ApproximationScheme& scheme,
                                         const SolverSettings& s) {
  s.validate();
  if (n < 0) throw Error(ErrorCode::index_out_of_range, "scheme_approximation_number: n must be >= 0");
  const int m = t.rows();
  SNumberValue v;
  v.kind = SKind::approximation;
  v.n = n;
  auto exact_zero = [&] {
    v.lower = v.upper = 0.0;
    v.method = Method::polyhedral_exact;
    v.lower_method = "full_range";
    v.approximant = t.matrix();
    v.frame = Matrix::Identity(m, m);
    return v;
  };
  if (n == 0) {
    const NormBracket nb = norm_bracket(t, s);
    v.lower = nb.lower;
    v.upper = nb.upper;
    v.lower_method = nb.exact ? "exact_norm" : "norm_ascent";
    v.approximant = Matrix::Zero(t.rows(), t.cols());
    v.frame = Matrix(m, 0);
  } else if (scheme.kind == SchemeKind::dim_subspaces) {
    if (n >= std::min(t.rows(), t.cols())) return exact_zero();
    v = approximation_number(t, n + 1, s);
    v.n = n;
    return v;
  } else if (scheme.kind == SchemeKind::sequence_lp) {
    return exact_zero();
  } else if (scheme.kind == SchemeKind::sparse_support || scheme.kind == SchemeKind::broken) {
    if (scheme.kind == SchemeKind::broken && n > m)
      throw Error(ErrorCode::invalid_argument, "broken scheme has no member with " + std::to_string(n) + " rows");
    if (scheme.kind == SchemeKind::sparse_support && n >= m) return exact_zero();
    double best_lower = kInf;
    v.upper = kInf;
    std::vector<int> arg;
    for_each_support(m, n, [&](const std::vector<int>& sup) {
      const NormBracket nb = tail_norm(t, sup, s);
      best_lower = std::min(best_lower, nb.lower);
      if (nb.upper < v.upper) {
        v.upper = nb.upper;
        arg = sup;
      }
    });
    v.lower = best_lower;
    v.lower_method = "support_enumeration";
    v.frame = coordinate_frame(m, arg);
    Matrix keep = Matrix::Zero(m, t.cols());
    for (int i : arg) keep.row(i) = t.matrix().row(i);
    v.approximant = keep;
  } else {
    v.upper = kInf;
    int top_rank = 0;
    for (const Matrix& f : scheme.candidates(n, m)) {
      if (f.rows() != m || !scheme.member(n, f)) continue;
      const Matrix basis = orthonormal_basis(f);
      top_rank = std::max(top_rank, static_cast<int>(basis.cols()));
      const Matrix b = basis.cols() ? Matrix(basis * fit_right(t, basis, s.vertex_cap)) : Matrix::Zero(m, t.cols());
      const double val = norm_bracket(t.with_matrix(t.matrix() - b), s).upper;
      if (val < v.upper) {
        v.upper = val;
        v.approximant = b;
        v.frame = f;
      }
    }
    if (!std::isfinite(v.upper)) throw Error(ErrorCode::invalid_argument, "custom scheme proposed no admissible member");
    // Every candidate range has dimension <= top_rank, so a_{top_rank+1} is a floor.
    if (top_rank < std::min(t.rows(), t.cols())) {
      BoundOptions bo;
      bo.seed = s.seed;
      bo.vertex_cap = s.vertex_cap;
      const LowerBound lb = s_number_lower(t, top_rank + 1, bo);
      v.lower = lb.value;
      v.lower_method = lb.method;
    }
  }
  if (v.lower > v.upper && v.lower <= v.upper * (1.0 + 1e-9) + 1e-15) v.lower = v.upper;
  v.lower = std::max(v.lower, 0.0);
  v.method = v.upper - v.lower <= s.tol ? Method::polyhedral_exact : Method::heuristic;
  return v;
}

std::vector<TauRow> tau_duality_check(const LinearOperator& t, int n_max, const SolverSettings& s, double tol) {
  s.validate();
  if (!t.polyhedral() && !t.hilbert())
    throw Error(ErrorCode::not_polyhedral, "tau_duality_check needs polyhedral (or Euclidean) spaces");
  const int hi = std::min(t.rows(), t.cols()) + 1;
  if (n_max < 1 || n_max > hi)
    throw Error(ErrorCode::index_out_of_range, "tau_duality_check: n_max outside 1.." + std::to_string(hi));
  const LinearOperator ts = adjoint(t);
  std::vector<TauRow> rows;
  for (int n = 1; n <= n_max; ++n) {
    TauRow r;
    r.n = n;
    r.pair = compare_brackets(symmetrized_number(t, n, s), symmetrized_number(ts, n, s), tol);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace snum
