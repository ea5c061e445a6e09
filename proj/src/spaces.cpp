#include "snum/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snum/linalg.hpp"
#include "snum/rng.hpp"

namespace snum {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::vertex_cap_exceeded: return "VertexCapExceeded";
    case ErrorCode::not_polyhedral: return "NotPolyhedral";
    case ErrorCode::not_hilbert: return "NotHilbert";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::degenerate_frame: return "DegenerateFrame";
    case ErrorCode::budget_exceeded: return "BudgetExceeded";
    case ErrorCode::convergence_failure: return "ConvergenceFailure";
    case ErrorCode::net_too_coarse: return "NetTooCoarse";
    case ErrorCode::weight_unbounded: return "WeightUnbounded";
    case ErrorCode::norm_violation: return "NormViolation";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::validation_error: return "ValidationError";
  }
  return "Unknown";
}

NormExp dual(NormExp p) {
  switch (p) {
    case NormExp::one: return NormExp::inf;
    case NormExp::two: return NormExp::two;
    case NormExp::inf: return NormExp::one;
  }
  return p;
}

std::string to_string(NormExp p) {
  switch (p) {
    case NormExp::one: return "1";
    case NormExp::two: return "2";
    case NormExp::inf: return "inf";
  }
  return "?";
}

NormExp parse_norm_exp(std::string_view text) {
  if (text == "1") return NormExp::one;
  if (text == "2") return NormExp::two;
  if (text == "inf" || text == "infinity" || text == "oo") return NormExp::inf;
  throw Error(ErrorCode::invalid_argument, "unsupported norm exponent '" + std::string(text) + "'");
}

NormedSpace::NormedSpace(int dim, NormExp p) : dim_(dim), p_(p) {
  if (dim < 1) throw Error(ErrorCode::invalid_argument, "space dimension must be >= 1");
}

double norm(const Vec& x, NormExp p) {
  if (x.size() == 0) return 0.0;
  switch (p) {
    case NormExp::one: return x.lpNorm<1>();
    case NormExp::two: return x.norm();
    case NormExp::inf: return x.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

Vector::Vector(Vec coords, NormedSpace space) : coords_(std::move(coords)), space_(space) {
  if (coords_.size() != space_.dim())
    throw Error(ErrorCode::invalid_argument, "vector length does not match space dimension");
}

double vector_norm(const Vector& x) { return norm(x.coords(), x.space().p()); }

LinearOperator::LinearOperator(Matrix matrix, NormedSpace domain, NormedSpace codomain)
    : matrix_(std::move(matrix)), domain_(domain), codomain_(codomain) {
  if (matrix_.rows() != codomain_.dim() || matrix_.cols() != domain_.dim())
    throw Error(ErrorCode::invalid_argument, "matrix shape does not match domain/codomain");
}

LinearOperator::LinearOperator(Matrix matrix, NormExp domain_p, NormExp codomain_p)
    : LinearOperator(matrix, NormedSpace(static_cast<int>(matrix.cols()), domain_p),
                     NormedSpace(static_cast<int>(matrix.rows()), codomain_p)) {}

LinearOperator adjoint(const LinearOperator& t) {
  return {t.matrix().transpose(), t.codomain().dual(), t.domain().dual()};
}

double identity_norm(int dim, NormExp from, NormExp to) {
  auto inv = [](NormExp p) {
    return p == NormExp::one ? 1.0 : p == NormExp::two ? 0.5 : 0.0;
  };
  const double e = inv(to) - inv(from);
  return e <= 0.0 ? 1.0 : std::pow(static_cast<double>(dim), e);
}

Vec dual_maximizer(const Vec& v, NormExp p) {
  const Eigen::Index n = v.size();
  Vec x = Vec::Zero(n);
  if (n == 0) return x;
  switch (p) {
    case NormExp::one: {
      Eigen::Index best = 0;
      v.cwiseAbs().maxCoeff(&best);
      x(best) = v(best) < 0 ? -1.0 : 1.0;
      break;
    }
    case NormExp::two: {
      const double nv = v.norm();
      if (nv > 0.0) x = v / nv;
      else x(0) = 1.0;
      break;
    }
    case NormExp::inf:
      for (Eigen::Index i = 0; i < n; ++i) x(i) = v(i) < 0 ? -1.0 : 1.0;
      break;
  }
  return x;
}

namespace {

struct Attained {
  double value;
  Vec witness;
};

// max over half the sign vectors of ||m s||_q, Gray-code order.
Attained sign_vertex_max(const Matrix& m, NormExp q) {
  const Eigen::Index d = m.cols();
  Vec s = Vec::Ones(d);
  Vec y = m * s;
  Attained best{norm(y, q), s};
  const std::uint64_t count = d > 0 ? (std::uint64_t{1} << (d - 1)) : 1;
  for (std::uint64_t k = 1; k < count; ++k) {
    // flip bit index = trailing zeros of k; coordinate 0 stays fixed at +1
    const int bit = __builtin_ctzll(k) + 1;
    s(bit) = -s(bit);
    y += 2.0 * s(bit) * m.col(bit);
    const double v = norm(y, q);
    if (v > best.value) best = {v, s};
  }
  return best;
}

Attained exact_attained(const Matrix& m, NormExp p, NormExp q, int vertex_cap) {
  const Eigen::Index rows = m.rows(), cols = m.cols();
  if (rows == 0 || cols == 0) {
    Vec w = Vec::Zero(cols);
    if (cols) w(0) = 1.0;
    return {0.0, w};
  }
  if (p == NormExp::one) {
    Attained best{-1.0, Vec()};
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double v = norm(m.col(j), q);
      if (v > best.value) best = {v, Vec::Unit(cols, j)};
    }
    return best;
  }
  if (q == NormExp::inf) {
    const NormExp pd = dual(p);
    Attained best{-1.0, Vec()};
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Vec row = m.row(i).transpose();
      const double v = norm(row, pd);
      if (v > best.value) best = {v, dual_maximizer(row, p)};
    }
    return best;
  }
  if (p == NormExp::two && q == NormExp::two) {
    const SvdResult s = svd(m);
    return {s.values(0), s.v.col(0)};
  }
  if (p == NormExp::inf) {
    if (cols > vertex_cap)
      throw Error(ErrorCode::vertex_cap_exceeded,
                  "domain dimension " + std::to_string(cols) + " exceeds vertex cap");
    return sign_vertex_max(m, q);
  }
  // p == 2, q == 1: ||M||_{2->1} = ||M^T||_{inf->2}
  if (rows > vertex_cap)
    throw Error(ErrorCode::vertex_cap_exceeded,
                "codomain dimension " + std::to_string(rows) + " exceeds vertex cap");
  const Matrix mt = m.transpose();
  const Attained a = sign_vertex_max(mt, NormExp::two);
  Vec x = mt * a.witness;
  const double nx = x.norm();
  if (nx > 0.0) x /= nx;
  else x = Vec::Unit(cols, 0);
  return {a.value, x};
}

// Boyd-style power iteration; returns best feasible point found.
Attained power_lower(const Matrix& m, NormExp p, NormExp q, int restarts, std::uint64_t seed) {
  const Eigen::Index d = m.cols();
  Attained best{0.0, Vec::Unit(d, 0)};
  for (int r = 0; r < restarts; ++r) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(r));
    Vec x = (r == 0) ? Vec(Vec::Ones(d)) : Vec(rng.normal_matrix(d, 1).col(0));
    x /= std::max(norm(x, p), 1e-300);
    double value = norm(m * x, q);
    for (int it = 0; it < 200; ++it) {
      const Vec g = dual_maximizer(m * x, q == NormExp::one ? NormExp::inf
                                        : q == NormExp::inf ? NormExp::one : NormExp::two);
      const Vec nx = dual_maximizer(m.transpose() * g, p);
      const double nv = norm(m * nx, q);
      if (nv <= value * (1.0 + 1e-15)) break;
      x = nx;
      value = nv;
    }
    if (value > best.value) best = {value, x};
  }
  return best;
}

}  // namespace

double exact_operator_norm(const Matrix& m, NormExp domain_p, NormExp codomain_p, int vertex_cap) {
  return exact_attained(m, domain_p, codomain_p, vertex_cap).value;
}

NormBracket operator_norm(const LinearOperator& t, const NormOptions& opts) {
  const NormExp p = t.domain().p(), q = t.codomain().p();
  try {
    Attained a = exact_attained(t.matrix(), p, q, opts.vertex_cap);
    return {a.value, a.value, true, std::move(a.witness)};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::vertex_cap_exceeded || !opts.allow_bracket) throw;
  }
  const Matrix& m = t.matrix();
  const int d = t.domain().dim(), r = t.codomain().dim();
  // Routes through exact geometries: (1, *), (*, inf), (2, 2).
  double upper = std::numeric_limits<double>::infinity();
  for (NormExp mid : {NormExp::one, NormExp::two, NormExp::inf}) {
    const double via_one =
        identity_norm(r, mid, q) * exact_operator_norm(m, NormExp::one, mid) * identity_norm(d, p, NormExp::one);
    upper = std::min(upper, via_one);
    const double via_inf =
        identity_norm(r, NormExp::inf, q) * exact_operator_norm(m, mid, NormExp::inf) * identity_norm(d, p, mid);
    upper = std::min(upper, via_inf);
  }
  upper = std::min(upper, identity_norm(r, NormExp::two, q) * exact_operator_norm(m, NormExp::two, NormExp::two) *
                              identity_norm(d, p, NormExp::two));
  Attained lo = power_lower(m, p, q, opts.restarts, opts.seed);
  return {lo.value, std::max(upper, lo.value), false, std::move(lo.witness)};
}

Matrix extreme_point_matrix(const NormedSpace& s, int vertex_cap) {
  const int d = s.dim();
  switch (s.p()) {
    case NormExp::one: return Matrix::Identity(d, d);
    case NormExp::two: throw Error(ErrorCode::not_polyhedral, "the Euclidean ball has no finite vertex set");
    case NormExp::inf: {
      if (d > vertex_cap)
        throw Error(ErrorCode::vertex_cap_exceeded, "dimension " + std::to_string(d) + " exceeds vertex cap");
      const std::uint64_t count = std::uint64_t{1} << (d - 1);
      Matrix out(d, static_cast<Eigen::Index>(count));
      for (std::uint64_t k = 0; k < count; ++k) {
        out(0, static_cast<Eigen::Index>(k)) = 1.0;
        for (int i = 1; i < d; ++i)
          out(i, static_cast<Eigen::Index>(k)) = ((k >> (i - 1)) & 1u) ? -1.0 : 1.0;
      }
      return out;
    }
  }
  return {};
}

std::vector<Vector> extreme_points(const NormedSpace& s, int vertex_cap) {
  const Matrix half = extreme_point_matrix(s, vertex_cap);
  std::vector<Vector> out;
  out.reserve(static_cast<size_t>(2 * half.cols()));
  for (Eigen::Index j = 0; j < half.cols(); ++j) {
    out.emplace_back(half.col(j), s);
    out.emplace_back(-half.col(j), s);
  }
  return out;
}

}  // namespace snum
