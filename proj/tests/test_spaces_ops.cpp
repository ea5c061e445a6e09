#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "snum/linalg.hpp"
#include "snum/spaces.hpp"
#include "support.hpp"

using namespace snum;
using namespace snum::test;

namespace {

// max ||T s||_q over sign vectors s, enumerated here without the library.
double sign_sweep(const Matrix& m, NormExp q) {
  const int d = static_cast<int>(m.cols());
  double best = 0.0;
  for (long mask = 0; mask < (1L << d); ++mask) {
    Vec s(d);
    for (int j = 0; j < d; ++j) s(j) = (mask >> j) & 1 ? 1.0 : -1.0;
    best = std::max(best, norm(m * s, q));
  }
  return best;
}

double column_max(const Matrix& m, NormExp q) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) best = std::max(best, norm(m.col(j), q));
  return best;
}

// Independent value of ||T|| for every exact case and for l2 -> l1 via ||T^T||_{inf -> 2}.
double reference_norm(const Matrix& m, NormExp p, NormExp q) {
  if (p == NormExp::one) return column_max(m, q);
  if (p == NormExp::inf) return sign_sweep(m, q);
  if (q == NormExp::inf) return column_max(m.transpose(), NormExp::two);
  if (q == NormExp::two) return svd(m).values.size() ? svd(m).values(0) : 0.0;
  return sign_sweep(m.transpose(), NormExp::two);
}

}  // namespace

TEST_CASE("vector_norm examples") {
  Vec x(3);
  x << 1, -2, 2;
  CHECK(vector_norm(Vector(x, NormedSpace(3, NormExp::two))) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(vector_norm(Vector(x, NormedSpace(3, NormExp::one))) == 5.0);
  CHECK(vector_norm(Vector(Vec::Zero(3), NormedSpace(3, NormExp::inf))) == 0.0);
  CHECK_THROWS_AS(Vector(Vec::Zero(2), NormedSpace(3, NormExp::inf)), Error);
}

TEST_CASE("dual of dual returns the space") {
  for (NormExp p : kExps) {
    const NormedSpace s(4, p);
    CHECK(s.dual().dual() == s);
  }
  CHECK(dual(NormExp::one) == NormExp::inf);
  CHECK(dual(NormExp::two) == NormExp::two);
  CHECK_THROWS_AS(NormedSpace(0, NormExp::two), Error);
}

TEST_CASE("adjoint examples") {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const LinearOperator t(m, NormExp::one, NormExp::inf);
  const LinearOperator ta = adjoint(t);
  Matrix mt(2, 2);
  mt << 1, 3, 2, 4;
  CHECK(ta.matrix() == mt);
  CHECK(ta.domain().p() == NormExp::one);
  CHECK(ta.codomain().p() == NormExp::inf);

  Matrix sym(3, 3);
  sym << 2, 1, 0, 1, 3, -1, 0, -1, 1;
  CHECK(adjoint(LinearOperator(sym, NormExp::two, NormExp::two)).matrix() == sym);
}

TEST_CASE("adjoint is an involution") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const LinearOperator t = operator_gen(rng, 6, any_exp(rng), any_exp(rng));
    const LinearOperator tt = adjoint(adjoint(t));
    CHECK(tt.matrix() == t.matrix());
    CHECK(tt.domain() == t.domain());
    CHECK(tt.codomain() == t.codomain());
  }
}

TEST_CASE("operator_norm examples") {
  const NormBracket a = operator_norm(LinearOperator(Matrix::Identity(2, 2), NormExp::inf, NormExp::one));
  CHECK(a.exact);
  CHECK(a.upper == doctest::Approx(2.0).epsilon(1e-15));

  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const NormBracket b = operator_norm(LinearOperator(m, NormExp::one, NormExp::one));
  CHECK(b.exact);
  // enumeration over the four signed basis vectors
  double oracle = 0.0;
  for (int j = 0; j < 2; ++j)
    for (double s : {1.0, -1.0}) oracle = std::max(oracle, (s * m.col(j)).lpNorm<1>());
  CHECK(oracle == 6.0);
  CHECK(b.lower == doctest::Approx(oracle).epsilon(1e-15));

  const NormBracket c = operator_norm(LinearOperator(diag({3, 2, 1}), NormExp::two, NormExp::two));
  CHECK(c.exact);
  CHECK(c.upper == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("extreme_points examples") {
  const auto cross = extreme_points(NormedSpace(2, NormExp::one));
  CHECK(cross.size() == 4);
  for (const Vector& v : cross) CHECK(v.coords().lpNorm<1>() == 1.0);
  const auto cube = extreme_points(NormedSpace(2, NormExp::inf));
  CHECK(cube.size() == 4);
  for (const Vector& v : cube) CHECK(v.coords().cwiseAbs().minCoeff() == 1.0);
  try {
    extreme_points(NormedSpace(2, NormExp::two));
    FAIL("expected NotPolyhedral");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_polyhedral);
  }
  try {
    extreme_points(NormedSpace(5, NormExp::inf), 4);
    FAIL("expected VertexCapExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::vertex_cap_exceeded);
  }
}

TEST_CASE("vertex cap without bracket") {
  NormOptions opts;
  opts.vertex_cap = 3;
  opts.allow_bracket = false;
  const LinearOperator t(Matrix::Identity(4, 4), NormExp::inf, NormExp::two);
  try {
    operator_norm(t, opts);
    FAIL("expected VertexCapExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::vertex_cap_exceeded);
  }
  opts.allow_bracket = true;
  const NormBracket b = operator_norm(t, opts);
  CHECK(b.lower <= b.upper + kExactTol);
  CHECK(b.upper >= 2.0 - kExactTol);
}

TEST_CASE("property: norm brackets contain the independent reference") {
  Rng rng(202);
  for (int trial = 0; trial < 300; ++trial) {
    const NormExp p = any_exp(rng), q = any_exp(rng);
    const LinearOperator t = operator_gen(rng, 6, p, q);
    const NormBracket b = operator_norm(t);
    const double ref = reference_norm(t.matrix(), p, q);
    INFO("p=" << to_string(p) << " q=" << to_string(q) << " trial " << trial);
    CHECK(b.lower <= b.upper + kExactTol);
    CHECK(b.lower <= ref + 1e-9 * (1.0 + ref));
    CHECK(b.upper >= ref - 1e-9 * (1.0 + ref));
    if (b.exact) CHECK(b.upper - b.lower <= kExactTol * (1.0 + ref));
    if (p != NormExp::two || q != NormExp::one) CHECK(b.exact);
    // witness attains the lower bound inside the unit ball
    if (b.witness.size()) {
      CHECK(norm(b.witness, p) <= 1.0 + 1e-12);
      CHECK(norm(t.matrix() * b.witness, q) >= b.lower - 1e-9 * (1.0 + b.lower));
    }
    // sampled ratios never exceed the certified upper bound
    for (int k = 0; k < 5; ++k) {
      const Vec x = rng.normal_matrix(t.cols(), 1);
      if (norm(x, p) > 0) CHECK(ratio(t.matrix(), x, p, q) <= b.upper * (1 + 1e-12) + 1e-12);
    }
  }
}

TEST_CASE("property: adjoint preserves exact norms") {
  Rng rng(303);
  for (int trial = 0; trial < 200; ++trial) {
    const LinearOperator t = operator_gen(rng, 6, any_exp(rng), any_exp(rng));
    const NormBracket a = operator_norm(t), b = operator_norm(adjoint(t));
    CHECK(a.lower <= b.upper + 1e-9 * (1 + a.upper));
    CHECK(b.lower <= a.upper + 1e-9 * (1 + a.upper));
  }
}

TEST_CASE("property: homogeneity and triangle inequality") {
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const NormExp p = any_exp(rng), q = any_exp(rng);
    const int rows = rng.uniform_int(1, 5), cols = rng.uniform_int(1, 5);
    const Matrix s = matrix_gen(rng, rows, cols), t = matrix_gen(rng, rows, cols);
    const double alpha = rng.uniform(-4, 4);
    const double ns = reference_norm(s, p, q), nt = reference_norm(t, p, q);
    const NormBracket scaled = operator_norm(LinearOperator(alpha * s, p, q));
    CHECK(scaled.lower <= std::abs(alpha) * ns + 1e-9 * (1 + ns));
    CHECK(scaled.upper >= std::abs(alpha) * ns - 1e-9 * (1 + ns));
    const NormBracket sum = operator_norm(LinearOperator(s + t, p, q));
    CHECK(sum.lower <= ns + nt + 1e-9 * (1 + ns + nt));
  }
}

TEST_CASE("svd residuals") {
  Rng rng(505);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = matrix_gen(rng, rng.uniform_int(1, 8), rng.uniform_int(1, 8));
    const SvdResult r = svd(a);
    const Matrix back = r.u * r.values.asDiagonal() * r.v.transpose();
    const double scale = std::max(1.0, r.values.size() ? r.values(0) : 0.0);
    CHECK((back - a).norm() <= 1e-10 * scale);
    for (Eigen::Index i = 1; i < r.values.size(); ++i) CHECK(r.values(i) <= r.values(i - 1));
  }
}
