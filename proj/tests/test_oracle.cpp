#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "snum/fixtures.hpp"
#include "snum/hash.hpp"
#include "snum/linalg.hpp"
#include "snum/oracle.hpp"
#include "snum/snumbers.hpp"
#include "support.hpp"

using namespace snum;
using namespace snum::test;

namespace {

// Exact min over c of ||p - c f||_q for a single direction. For q = 1, inf the
// objective is convex piecewise linear, so a minimizer sits on a breakpoint.
double line_distance(const Vec& p, const Vec& f, NormExp q) {
  if (q == NormExp::two) return (p - (p.dot(f) / f.dot(f)) * f).norm();
  std::vector<double> cands{0.0};
  const Eigen::Index m = p.size();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (f(i) != 0.0) cands.push_back(p(i) / f(i));
    if (q != NormExp::inf) continue;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (f(i) - f(j) != 0.0) cands.push_back((p(i) - p(j)) / (f(i) - f(j)));
      if (f(i) + f(j) != 0.0) cands.push_back((p(i) + p(j)) / (f(i) + f(j)));
    }
  }
  double best = norm(p, q);
  for (double c : cands) best = std::min(best, norm(p - c * f, q));
  return best;
}

}  // namespace

TEST_CASE("vertex_norm_oracle examples") {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  CHECK(vertex_norm_oracle(LinearOperator(m, NormExp::one, NormExp::one)).value == 6.0);
  CHECK(vertex_norm_oracle(LinearOperator(Matrix::Identity(3, 3), NormExp::inf, NormExp::one)).value == 3.0);
  CHECK(vertex_norm_oracle(LinearOperator(Matrix::Zero(3, 2), NormExp::inf, NormExp::two)).value == 0.0);
  try {
    vertex_norm_oracle(LinearOperator(m, NormExp::two, NormExp::one));
    FAIL("expected NotPolyhedral");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_polyhedral);
  }
  try {
    vertex_norm_oracle(LinearOperator(Matrix::Identity(5, 5), NormExp::inf, NormExp::one), 4);
    FAIL("expected VertexCapExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::vertex_cap_exceeded);
  }
}

TEST_CASE("vertex_norm_oracle matches closed-form column and row norms") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const NormExp p = polyhedral_exp(rng), q = any_exp(rng);
    const LinearOperator t = operator_gen(rng, 6, p, q);
    const Matrix& m = t.matrix();
    double closed = 0.0;
    if (p == NormExp::one) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) closed = std::max(closed, norm(m.col(j), q));
    } else if (q == NormExp::inf) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) closed = std::max(closed, m.row(i).lpNorm<1>());
    } else {
      // linf domain into l1 or l2: sign enumeration written out here
      const int d = t.cols();
      for (long mask = 0; mask < (1L << d); ++mask) {
        Vec s(d);
        for (int j = 0; j < d; ++j) s(j) = (mask >> j) & 1 ? 1.0 : -1.0;
        closed = std::max(closed, norm(m * s, q));
      }
    }
    const OracleResult r = vertex_norm_oracle(t);
    CHECK(std::abs(r.value - closed) <= 1e-12 * std::max(1.0, closed));
    // the certificate (maximizing vertex) reproduces the value
    CHECK(std::abs(norm(m * r.point, q) - r.value) <= 1e-12 * std::max(1.0, r.value));
    CHECK(norm(r.point, p) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("lp_distance examples") {
  Vec p(2);
  p << 1, 1;
  Matrix f(2, 1);
  f << 1, 0;
  CHECK(lp_distance(p, f, NormExp::two).value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lp_distance(p, f, NormExp::inf).value == doctest::Approx(1.0).epsilon(1e-15));
  Vec p3(3);
  p3 << 3, 4, 0;
  Matrix f3 = Matrix::Zero(3, 2);
  f3(0, 0) = f3(1, 1) = 1.0;
  CHECK(lp_distance(p3, f3, NormExp::one).value == doctest::Approx(0.0));
  Matrix dep(3, 2);
  dep << 1, 2, 0, 0, 1, 2;
  try {
    lp_distance(p3, dep, NormExp::inf);
    FAIL("expected DegenerateFrame");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_frame);
  }
}

TEST_CASE("property: lp_distance is exact on lines and never worse than the Euclidean seed") {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = rng.uniform_int(2, 7);
    const Vec p = rng.normal_matrix(m, 1);
    const int k = rng.uniform_int(1, m - 1);
    const Matrix f = rng.normal_matrix(m, k);
    const Matrix b = orthonormal_basis(f);
    const Vec euclid = p - b * (b.transpose() * p);
    for (NormExp q : kExps) {
      const OracleResult r = lp_distance(p, f, q);
      INFO("trial " << trial << " q=" << to_string(q));
      // certificate: the reported coefficients reproduce the value
      CHECK(std::abs(norm(p - b * r.point, q) - r.value) <= 1e-12 * std::max(1.0, r.value));
      CHECK(r.value <= norm(euclid, q) + 1e-12);
      if (k == 1) CHECK(r.value == doctest::Approx(line_distance(p, f.col(0), q)).epsilon(1e-9));
    }
  }
}

TEST_CASE("svd examples") {
  const SvdResult d = svd(diag({3, 2, 1}));
  CHECK(d.values(0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(d.values(1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(d.values(2) == doctest::Approx(1.0).epsilon(1e-15));
  Rng rng(13);
  const SvdResult o = svd(orthogonal_gen(rng, 5));
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(o.values(i) == doctest::Approx(1.0).epsilon(1e-12));
  Matrix nil(2, 2);
  nil << 0, 1, 0, 0;
  const SvdResult z = svd(nil);
  CHECK(z.values(0) == doctest::Approx(1.0));
  CHECK(z.values(1) == doctest::Approx(0.0));
  try {
    svd(rng.normal_matrix(6, 6), 0);
    FAIL("expected ConvergenceFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::convergence_failure);
  }
}

TEST_CASE("property: svd reconstruction and orthogonality") {
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix a = matrix_gen(rng, rng.uniform_int(1, 9), rng.uniform_int(1, 9));
    const SvdResult r = svd(a);
    const double scale = std::max(1.0, r.values.size() ? r.values(0) : 0.0);
    CHECK((r.u * r.values.asDiagonal() * r.v.transpose() - a).norm() <= 1e-10 * scale);
    const Eigen::Index k = r.values.size();
    for (Eigen::Index i = 0; i < k; ++i) {
      if (r.values(i) <= 1e-12 * scale) continue;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (r.values(j) <= 1e-12 * scale) continue;
        const double ev = i == j ? 1.0 : 0.0;
        CHECK(std::abs(r.v.col(i).dot(r.v.col(j)) - ev) <= 1e-10);
        CHECK(std::abs(r.u.col(i).dot(r.u.col(j)) - ev) <= 1e-10);
      }
    }
  }
}

TEST_CASE("brute_rank_approx examples") {
  const OracleResult d = brute_rank_approx(LinearOperator(diag({3, 2, 1}), NormExp::two, NormExp::two), 2);
  CHECK(d.value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_FALSE(d.self_check_failed);
  Vec u(3), v(3);
  u << 1, 2, -1;
  v << 0.5, 1, 3;
  for (NormExp p : kExps)
    for (NormExp q : kExps) CHECK(brute_rank_approx(LinearOperator(u * v.transpose(), p, q), 2).value <= 1e-12);

  // I_2 : l1 -> linf. A rank-1 B with error e needs (1-e)^2 <= e^2, so the value is 1/2.
  const OracleResult i2 = brute_rank_approx(canonical_injection(2), 2);
  CHECK(i2.value == doctest::Approx(0.5).epsilon(1e-9));
  const std::vector<FixtureRecord> fx = load_fixtures(SNUM_FIXTURE_DIR);
  const FixtureRecord& frozen = find_fixture(fx, "oracle_i2_l1_linf_n2");
  CHECK(i2.value == frozen.value);
  CHECK(hex64(fnv1a64(i2.transcript)) == frozen.transcript_hash());
  // witness reproduces the value
  CHECK(numerical_rank(i2.witness) <= 1);
  CHECK(exact_operator_norm(Matrix::Identity(2, 2) - i2.witness, NormExp::one, NormExp::inf) ==
        doctest::Approx(i2.value).epsilon(1e-12));

  CHECK_THROWS_AS(brute_rank_approx(LinearOperator(Matrix::Identity(7, 7), NormExp::two, NormExp::two), 2), Error);
  CHECK_THROWS_AS(brute_rank_approx(canonical_injection(3), 4), Error);
}

TEST_CASE("frozen oracle fixtures reproduce") {
  const std::vector<FixtureRecord> fx = load_fixtures(SNUM_FIXTURE_DIR);
  for (const char* id : {"oracle_diag321_l2_n2", "oracle_norm_1234_l1_l1"}) {
    const FixtureRecord& f = find_fixture(fx, id);
    const FixtureRecord r = compute_fixture(id);
    CHECK(r.value == f.value);
    CHECK(r.transcript_hash() == f.transcript_hash());
  }
  CHECK(find_fixture(fx, "oracle_norm_1234_l1_l1").value == 6.0);
  CHECK(find_fixture(fx, "oracle_diag321_l2_n2").value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("property: brute_rank_approx matches sigma_n on l2") {
  Rng rng(15);
  for (int trial = 0; trial < 60; ++trial) {
    const LinearOperator t = hilbert_gen(rng, 6);
    const SvdResult s = svd(t.matrix());
    for (int n = 1; n <= 3; ++n) {
      const double sigma = n <= s.values.size() ? s.values(n - 1) : 0.0;
      OracleBudget b;
      b.restarts = 8;
      const OracleResult r = brute_rank_approx(t, n, b);
      CHECK(std::abs(r.value - sigma) <= 1e-9 * std::max(1.0, s.values(0)));
      CHECK_FALSE(r.self_check_failed);
    }
  }
}

TEST_CASE("property: sandwich of oracle values between heuristic brackets") {
  Rng rng(16);
  for (int trial = 0; trial < 30; ++trial) {
    const LinearOperator t = polyhedral_gen(rng, 3);
    const int n = rng.uniform_int(1, std::min(3, std::min(t.rows(), t.cols()) + 1));
    const OracleResult r = brute_rank_approx(t, n);
    const SNumberValue h = approximation_number(t, n);
    INFO("trial " << trial << " n=" << n);
    CHECK(r.value >= h.lower - 1e-9 * (1 + r.value));
    CHECK(r.value <= h.upper + 1e-9 * (1 + r.value));
  }
}
