#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "snum/fixtures.hpp"
#include "snum/linalg.hpp"
#include "snum/oracle.hpp"
#include "snum/schemes.hpp"
#include "support.hpp"

using namespace snum;
using namespace snum::test;

namespace {

// min over supports |S| <= n of max_i ||(p_i) off S||_q, by enumeration of bitmasks.
double sparse_width_reference(const Matrix& pts, NormExp q, int n) {
  const int m = static_cast<int>(pts.rows());
  double best = 1e300;
  for (long mask = 0; mask < (1L << m); ++mask) {
    if (__builtin_popcountl(static_cast<unsigned long>(mask)) > n) continue;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      Vec r = pts.col(j);
      for (int i = 0; i < m; ++i)
        if ((mask >> i) & 1) r(i) = 0.0;
      worst = std::max(worst, norm(r, q));
    }
    best = std::min(best, worst);
  }
  return best;
}

// min over supports |S| <= n of ||P_{S^c} T||.
double sparse_approx_reference(const LinearOperator& t, int n) {
  const int m = t.rows();
  double best = 1e300;
  for (long mask = 0; mask < (1L << m); ++mask) {
    if (__builtin_popcountl(static_cast<unsigned long>(mask)) > n) continue;
    Matrix r = t.matrix();
    for (int i = 0; i < m; ++i)
      if ((mask >> i) & 1) r.row(i).setZero();
    best = std::min(best, operator_norm(t.with_matrix(r)).upper);
  }
  return best;
}

std::vector<double> random_x(Rng& rng, int len) {
  std::vector<double> x(static_cast<size_t>(len), 0.0);
  for (double& v : x) {
    const int mode = rng.uniform_int(0, 4);
    v = mode == 0 ? 0.0 : mode == 1 ? (rng.uniform_int(0, 1) ? 1.0 : -1.0) : rng.uniform(-1, 1);
  }
  return x;
}

}  // namespace

TEST_CASE("check_scheme_axioms on built-in schemes") {
  for (SchemeKind k : {SchemeKind::dim_subspaces, SchemeKind::sparse_support, SchemeKind::sequence_lp}) {
    const SchemeAxiomReport r = check_scheme_axioms(make_scheme(k), 1000, 7);
    INFO(to_string(k));
    CHECK(r.all_pass());
    for (const SchemeAxiomResult& a : r.results) CHECK(a.trials >= 1000);
  }
  const SchemeAxiomReport broken = check_scheme_axioms(broken_scheme(), 1000, 7);
  CHECK_FALSE(broken.all_pass());
  const auto ga1 = std::find_if(broken.results.begin(), broken.results.end(),
                                [](const SchemeAxiomResult& a) { return a.axiom == "GA1"; });
  REQUIRE(ga1 != broken.results.end());
  CHECK_FALSE(ga1->pass);
  CHECK_FALSE(ga1->counterexample.empty());
}

TEST_CASE("scheme membership basics") {
  const ApproximationScheme sp = sparse_support_scheme();
  Matrix f = Matrix::Zero(4, 2);
  f(0, 0) = 1;
  f(2, 1) = -3;
  CHECK(sp.member(2, f));
  CHECK_FALSE(sp.member(1, f));
  CHECK(sp.member(0, Matrix::Zero(4, 1)));
  const ApproximationScheme ds = dim_subspaces_scheme();
  CHECK(ds.member(2, f));
  CHECK_FALSE(ds.member(1, f));
}

TEST_CASE("generalized_kolmogorov examples") {
  Matrix triple = diag({3, 2, 1});
  const GeneralizedWidth w = generalized_kolmogorov(triple, NormExp::two, 2, dim_subspaces_scheme());
  const double derived = 6.0 / 7.0;  // equalize 3u1 = 2u2 = u3 on the unit sphere
  CHECK(w.lower <= derived + 1e-9);
  CHECK(w.upper == doctest::Approx(derived).epsilon(1e-9));
  CHECK(validate_width(w, triple, NormExp::two, dim_subspaces_scheme()));
  const SNumberValue k = kolmogorov_number(LinearOperator(triple, NormExp::one, NormExp::two), 3);
  CHECK(std::abs(k.upper - w.upper) <= 1e-9);

  for (SchemeKind s : {SchemeKind::dim_subspaces, SchemeKind::sparse_support})
    CHECK(generalized_kolmogorov(triple, NormExp::inf, 3, make_scheme(s)).upper <= 1e-12);

  Matrix cube(2, 4);
  cube << 1, 1, -1, -1, 1, -1, 1, -1;
  const GeneralizedWidth c = generalized_kolmogorov(cube, NormExp::inf, 1, sparse_support_scheme());
  CHECK(c.upper == 1.0);
  CHECK(c.lower == 1.0);
}

TEST_CASE("generalized_kolmogorov needs a polyhedral domain for custom schemes") {
  const ApproximationScheme custom = custom_scheme(
      "axes",
      [](int n, const Matrix& f) { return n >= 1 || numerical_rank(f) == 0; },
      [](int, int dim) { return std::vector<Matrix>{Matrix::Identity(dim, 1)}; },
      [](Rng&, int, int dim) { return Matrix(Matrix::Identity(dim, 1)); });
  try {
    generalized_kolmogorov(LinearOperator(diag({1, 2}), NormExp::two, NormExp::inf), 1, custom);
    FAIL("expected NotPolyhedral");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_polyhedral);
  }
  const GeneralizedWidth g = generalized_kolmogorov(LinearOperator(diag({1, 2}), NormExp::one, NormExp::inf), 1, custom);
  CHECK(g.upper == doctest::Approx(2.0));
}

TEST_CASE("property: sparse widths are exact, dim_subspaces widths match kolmogorov_number") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = rng.uniform_int(2, 5), k = rng.uniform_int(1, 5);
    const Matrix pts = matrix_gen(rng, m, k);
    const NormExp q = any_exp(rng);
    const int n = rng.uniform_int(0, m);
    const GeneralizedWidth w = generalized_kolmogorov(pts, q, n, sparse_support_scheme());
    const double ref = sparse_width_reference(pts, q, n);
    INFO("trial " << trial << " q=" << to_string(q) << " n=" << n);
    CHECK(std::abs(w.upper - ref) <= 1e-12 * (1 + ref));
    CHECK(w.lower <= w.upper + 1e-12);
    CHECK(validate_width(w, pts, q, sparse_support_scheme()));
  }
  for (int trial = 0; trial < 20; ++trial) {
    const LinearOperator t = hilbert_gen(rng, 4);
    double prev = 1e300;
    for (int n = 0; n <= t.rows(); ++n) {
      const GeneralizedWidth w = generalized_kolmogorov(t, n, dim_subspaces_scheme());
      const SNumberValue k = kolmogorov_number(t, n + 1);
      CHECK(std::abs(w.upper - k.upper) <= 1e-9 * (1 + k.upper));
      CHECK(w.upper <= prev + 1e-12);
      prev = w.upper;
    }
    CHECK(generalized_kolmogorov(t, 0, dim_subspaces_scheme()).upper ==
          doctest::Approx(operator_norm(t).upper).epsilon(1e-9));
  }
}

TEST_CASE("shift_decompose examples") {
  const SequenceGenerator one = SequenceGenerator::constant(1.0);
  const ShiftDecomposition a = shift_decompose({0.0, 1.0}, one, 1);
  CHECK(a.a_set == std::vector<int>{2});
  CHECK(a.y == std::vector<double>{0.0});
  CHECK(a.z == std::vector<double>{1.0});
  CHECK(a.certified());

  const ShiftDecomposition z = shift_decompose({0.0, 0.0, 0.0}, one, 4);
  CHECK(std::all_of(z.y.begin(), z.y.end(), [](double v) { return v == 0.0; }));
  CHECK(std::all_of(z.z.begin(), z.z.end(), [](double v) { return v == 0.0; }));

  for (int m = 1; m <= 10; ++m) {
    const ShiftDecomposition c = shift_decompose({0.0, 0.0, std::ldexp(1.0, -(m + 1))}, one, m);
    CHECK(c.a_set.empty());
    CHECK(c.y == std::vector<double>{0.0, 0.5});
    CHECK(c.z == std::vector<double>{0.0, 0.0});
    CHECK(c.y_sup == 0.5);
  }

  try {
    shift_decompose({1.5}, one, 1);
    FAIL("expected NormViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::norm_violation);
  }
  SequenceGenerator grow = SequenceGenerator::geometric(2.0);
  grow.declare_bound(10.0);
  try {
    shift_decompose({0, 0, 0, 0, 1}, grow, 1);
    FAIL("expected WeightUnbounded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::weight_unbounded);
  }
}

TEST_CASE("property: shift_decompose certificates") {
  Rng rng(32);
  const SequenceGenerator weights[] = {SequenceGenerator::constant(1.0), SequenceGenerator::two_plus_sin(),
                                       SequenceGenerator::random_bounded(0.25, 4.0, 99)};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::vector<double> x = random_x(rng, rng.uniform_int(0, 40));
    const SequenceGenerator& w = weights[trial % 3];
    const int m = rng.uniform_int(1, 10);
    const double budget = rng.uniform_int(0, 3) == 0 ? rng.uniform(0, 5) : -1.0;
    const ShiftDecomposition d = shift_decompose(x, w, m, budget);
    CHECK(d.certified());
    CHECK(d.y_sup <= 1.0);
    CHECK(std::isfinite(d.z_l1));
    // B_w e_n = w_n e_{n-1}, recomputed here
    for (size_t k = 0; k + 1 < x.size(); ++k) {
      const double image = w(static_cast<int>(k) + 2) * x[k + 1];
      CHECK(std::abs(image - (std::ldexp(d.y[k], -m) + d.z[k])) <= 1e-12);
    }
    CHECK(d.radius() <= std::ldexp(1.0, -m));
  }
}

TEST_CASE("sequence generators") {
  CHECK(SequenceGenerator::harmonic()(4) == 0.25);
  CHECK(SequenceGenerator::geometric(0.5)(3) == 0.125);
  for (int n = 1; n <= 50; ++n) {
    const double v = SequenceGenerator::two_plus_sin()(n);
    CHECK(v >= 1.0);
    CHECK(v <= 3.0);
    const double r = SequenceGenerator::random_bounded(0.5, 2.0, 4)(n);
    CHECK(r == SequenceGenerator::random_bounded(0.5, 2.0, 4)(n));
    CHECK(r >= 0.5);
    CHECK(r <= 2.0);
  }
  const SequenceGenerator l = SequenceGenerator::list({3, 1, 2}, TailRule::cycle);
  CHECK(l(4) == 3.0);
  CHECK(SequenceGenerator::list({3, 1, 2}, TailRule::repeat_last)(9) == 2.0);
  CHECK(SequenceGenerator::list({3, 1, 2})(9) == 0.0);
}

TEST_CASE("property: truncations embed as upper-left blocks") {
  const ModelOperator models[] = {
      ModelOperator::diagonal(SequenceGenerator::harmonic()),
      ModelOperator::weighted_shift(SequenceGenerator::two_plus_sin()),
      ModelOperator::weighted_shift(SequenceGenerator::random_bounded(0.1, 2.0, 5)),
      ModelOperator::canonical_injection(),
      ModelOperator::zero(),
  };
  for (const ModelOperator& m : models)
    for (int d = 1; d < 8; ++d) {
      const LinearOperator a = m.truncate(d), b = m.truncate(d + 1);
      CHECK(b.matrix().topLeftCorner(d, d) == a.matrix());
    }
  const LinearOperator s = ModelOperator::weighted_shift(SequenceGenerator::list({5, 6, 7})).truncate(3);
  CHECK(s.matrix()(0, 1) == 6.0);
  CHECK(s.matrix()(1, 2) == 7.0);
  CHECK(s.matrix()(0, 0) == 0.0);
}

TEST_CASE("q_compact_diagnostic") {
  const ModelOperator shift = ModelOperator::weighted_shift(SequenceGenerator::constant(1.0));
  const QCompactDiagnostic q = q_compact_diagnostic(shift, sequence_lp_scheme(), 10, 12);
  CHECK(q.samples == 200);
  CHECK(q.certificates_ok);
  for (const GeneralizedWidth& w : q.widths)
    if (w.n >= 1) CHECK(w.radius <= std::ldexp(1.0, -w.n));

  const ModelOperator harm = ModelOperator::diagonal(SequenceGenerator::harmonic());
  const QCompactDiagnostic h = q_compact_diagnostic(harm, dim_subspaces_scheme(), 4, 6);
  REQUIRE(h.widths.size() == 5);
  for (const GeneralizedWidth& w : h.widths) CHECK(w.upper == doctest::Approx(1.0 / (w.n + 1)).epsilon(1e-9));
  CHECK(h.monotone);

  const QCompactDiagnostic z = q_compact_diagnostic(ModelOperator::zero(), dim_subspaces_scheme(), 3, 4);
  for (const GeneralizedWidth& w : z.widths) CHECK(w.upper == 0.0);
}

TEST_CASE("gamma_estimate") {
  const GammaTable harm = gamma_estimate(ModelOperator::diagonal(SequenceGenerator::harmonic()), {4, 6}, {1, 2, 3, 4});
  CHECK(harm.values.back().back().upper == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(harm.monotone_in_n);
  CHECK(harm.estimate <= 0.25 + 1e-9);

  const GammaTable id = gamma_estimate(ModelOperator::diagonal(SequenceGenerator::constant(1.0)), {5}, {1, 2, 3, 4, 5});
  for (const SNumberValue& v : id.values[0]) CHECK(v.upper == doctest::Approx(1.0).epsilon(1e-9));

  const std::vector<FixtureRecord> fx = load_fixtures(SNUM_FIXTURE_DIR);
  const GammaTable sh = gamma_estimate(ModelOperator::weighted_shift(SequenceGenerator::constant(1.0)), {2, 3, 4}, {1, 2, 3});
  for (size_t i = 0; i < sh.d_list.size(); ++i)
    for (size_t j = 0; j < sh.n_list.size(); ++j) {
      const std::string id = "gamma_shift_d" + std::to_string(sh.d_list[i]) + "_n" + std::to_string(sh.n_list[j]);
      CHECK(sh.values[i][j].upper == find_fixture(fx, id).value);
    }
}

TEST_CASE("scheme_approximation_number") {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearOperator t = hilbert_gen(rng, 4);
    for (int n = 0; n <= std::min(t.rows(), t.cols()); ++n) {
      const SNumberValue s = scheme_approximation_number(t, n, dim_subspaces_scheme());
      CHECK(std::abs(s.upper - approximation_number(t, n + 1).upper) <= 1e-9);
    }
  }
  const LinearOperator d(diag({3, 2, 1}), NormExp::inf, NormExp::inf);
  const SNumberValue sp = scheme_approximation_number(d, 1, sparse_support_scheme());
  CHECK(sp.upper == 2.0);
  CHECK(sp.lower == 2.0);
  CHECK(scheme_approximation_number(d, 3, sparse_support_scheme()).upper == 0.0);
  CHECK(scheme_approximation_number(d, 3, dim_subspaces_scheme()).upper == 0.0);

  for (int trial = 0; trial < 30; ++trial) {
    const LinearOperator t = operator_gen(rng, 4, any_exp(rng), any_exp(rng));
    const int n = rng.uniform_int(0, t.rows());
    const SNumberValue v = scheme_approximation_number(t, n, sparse_support_scheme());
    const double ref = sparse_approx_reference(t, n);
    CHECK(v.lower <= ref + 1e-9 * (1 + ref));
    CHECK(v.upper <= ref + 1e-9 * (1 + ref) + (v.upper - v.lower));
    if (t.domain().p() != NormExp::two || t.codomain().p() != NormExp::one)
      CHECK(std::abs(v.upper - ref) <= 1e-9 * (1 + ref));
  }
}

TEST_CASE("tau_duality_check") {
  for (const TauRow& r : tau_duality_check(LinearOperator(Matrix::Zero(2, 2), NormExp::one, NormExp::inf), 3)) {
    CHECK(r.pair.pass);
    CHECK(r.pair.lhs.upper == 0.0);
    CHECK(r.pair.rhs.upper == 0.0);
  }
  SolverSettings s;
  s.oracle_refine = true;
  const std::vector<FixtureRecord> fx = load_fixtures(SNUM_FIXTURE_DIR);
  for (const TauRow& r : tau_duality_check(LinearOperator(diag({3, 2, 1}), NormExp::one, NormExp::inf), 3, s)) {
    INFO("n=" << r.n);
    CHECK(r.pair.pass);
    const FixtureRecord& f = find_fixture(fx, "tau_diag321_l1_linf_n" + std::to_string(r.n));
    CHECK(r.pair.lhs.lower <= f.value + 1e-9);
    CHECK(f.lower <= r.pair.lhs.upper + 1e-9);
  }
  const LinearOperator rnd(Rng::stream(11, 0).normal_matrix(3, 3), NormExp::inf, NormExp::one);
  for (const TauRow& r : tau_duality_check(rnd, 3, s)) {
    INFO("n=" << r.n << " [" << r.pair.lhs.lower << ", " << r.pair.lhs.upper << "] vs [" << r.pair.rhs.lower
              << ", " << r.pair.rhs.upper << "]");
    CHECK(r.pair.pass);
    const FixtureRecord& f = find_fixture(fx, "tau_rand3_linf_l1_n" + std::to_string(r.n));
    CHECK(r.pair.lhs.lower <= f.value + 1e-9);
  }
}
