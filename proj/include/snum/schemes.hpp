#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "snum/rng.hpp"
#include "snum/snumbers.hpp"
#include "snum/spaces.hpp"

namespace snum {

enum class SchemeKind { dim_subspaces, sparse_support, broken, sequence_lp, custom };

std::string to_string(SchemeKind k);
SchemeKind parse_scheme_kind(std::string_view text);

/// A member A of Q_n is described by a frame: A is the span of its columns.
struct ApproximationScheme {
  std::string name;
  SchemeKind kind = SchemeKind::dim_subspaces;
  std::function<bool(int n, const Matrix& frame)> member;
  // Distance from a point to the union of Q_n in l_q.
  std::function<double(int n, const Vec& point, NormExp q)> best_distance;
  // Draws a member of Q_n in R^dim.
  std::function<Matrix(Rng& rng, int n, int dim)> sample;
  // Candidate members proposed to the width solvers (custom schemes only).
  std::function<std::vector<Matrix>(int n, int dim)> candidates;
};

ApproximationScheme dim_subspaces_scheme();
ApproximationScheme sparse_support_scheme();
/// Q_n = frames with exactly n nonzero rows; violates GA1.
ApproximationScheme broken_scheme();
/// A_n = l_n; at finite dimension every vector lies in every A_n with n >= 1.
ApproximationScheme sequence_lp_scheme();
ApproximationScheme custom_scheme(std::string name, std::function<bool(int, const Matrix&)> member,
                                  std::function<std::vector<Matrix>(int, int)> candidates,
                                  std::function<Matrix(Rng&, int, int)> sample);
ApproximationScheme make_scheme(SchemeKind kind);

struct SchemeAxiomResult {
  SchemeAxiomResult(std::string a = {}) : axiom(std::move(a)) {}
  std::string axiom;  // GA1, GA2, GA3
  bool pass = true;
  int trials = 0;
  std::string counterexample;
};

struct SchemeAxiomReport {
  std::string scheme;
  std::vector<SchemeAxiomResult> results;
  bool all_pass() const;
};

struct SchemeSampling {
  int dim = 5;
  int n_max = 4;
};

SchemeAxiomReport check_scheme_axioms(const ApproximationScheme& q, int trials, std::uint64_t seed,
                                      const SchemeSampling& sampling = {});

struct GeneralizedWidth {
  int n = 0;
  std::string scheme;
  double lower = 0.0;
  double upper = 0.0;
  Method method = Method::heuristic;
  Matrix frame;          // the member A proposed by the solver
  double radius = 0.0;   // max point-to-A distance, re-evaluated
  bool validated = false;
};

/// delta_n(D; Q) for the absolutely convex hull of the columns of `points` in l_q^m.
GeneralizedWidth generalized_kolmogorov(const Matrix& points, NormExp q, int n, const ApproximationScheme& scheme,
                                        const SolverSettings& s = {});
/// delta_n(T; Q) = delta_n(T(B_X); Q).
GeneralizedWidth generalized_kolmogorov(const LinearOperator& t, int n, const ApproximationScheme& scheme,
                                        const SolverSettings& s = {});

/// Re-checks a width witness: membership of the frame in Q_n and every point within radius.
bool validate_width(const GeneralizedWidth& w, const Matrix& points, NormExp q, const ApproximationScheme& scheme,
                    double tol = 1e-9);

enum class TailRule { zero, repeat_last, cycle };

/// Lazily evaluated sequence (1-based) with a declared bound.
class SequenceGenerator {
 public:
  enum class Form { constant, harmonic, geometric, two_plus_sin, random_bounded, list };

  static SequenceGenerator constant(double c);
  static SequenceGenerator harmonic();
  static SequenceGenerator geometric(double r);
  static SequenceGenerator two_plus_sin();
  static SequenceGenerator random_bounded(double lo, double hi, std::uint64_t seed);
  static SequenceGenerator list(std::vector<double> values, TailRule tail = TailRule::zero);

  /// Throws WeightUnbounded when |value| exceeds the declared bound.
  double operator()(int n) const;
  double bound() const { return bound_; }
  SequenceGenerator& declare_bound(double b);
  Form form() const { return form_; }
  std::string describe() const;

 private:
  double raw(int n) const;

  Form form_ = Form::constant;
  double a_ = 1.0, b_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<double> values_;
  TailRule tail_ = TailRule::zero;
  double bound_ = 1.0;
};

struct ShiftDecomposition {
  int m = 1;
  std::vector<double> x;       // x_1..x_N
  std::vector<double> w;       // w_1..w_N as used
  std::vector<double> y;       // y_1..y_{N-1}
  std::vector<double> z;       // z_1..z_{N-1}
  std::vector<int> a_set;      // A = {n >= 2 : 2^m |x_n w_n| > 1}
  std::vector<int> subsequence;
  double residual = 0.0;       // max |w_n x_n - (2^-m y_{n-1} + z_{n-1})|
  double y_sup = 0.0;
  double z_l1 = 0.0;
  double radius() const { return std::ldexp(y_sup, -m); }
  bool certified(double tol = 1e-12) const;
};

/// Splits B_w(x) = 2^-m y + z with ||y||_inf <= 1 and z finitely supported.
/// Indices outside A whose running sum of |w_n x_n| exceeds `budget` join the
/// summable subsequence; a negative budget means the total (no subsequence).
ShiftDecomposition shift_decompose(const std::vector<double>& x, const SequenceGenerator& w, int m,
                                   double budget = -1.0);

class ModelOperator {
 public:
  enum class Family { diagonal, weighted_shift, canonical_injection, zero };

  static ModelOperator diagonal(SequenceGenerator lambda, NormExp p = NormExp::two);
  static ModelOperator weighted_shift(SequenceGenerator w, NormExp p = NormExp::inf);
  static ModelOperator canonical_injection();
  static ModelOperator zero(NormExp p = NormExp::two);

  LinearOperator truncate(int d) const;
  Family family() const { return family_; }
  const SequenceGenerator& sequence() const { return seq_; }
  NormExp domain_p() const { return dom_; }
  NormExp codomain_p() const { return cod_; }
  std::string describe() const;

 private:
  Family family_ = Family::zero;
  SequenceGenerator seq_ = SequenceGenerator::constant(0.0);
  NormExp dom_ = NormExp::two, cod_ = NormExp::two;
};

struct QCompactDiagnostic {
  std::vector<GeneralizedWidth> widths;  // n = 0..n_max
  bool monotone = true;
  bool evidence = false;                  // delta_{n_max} <= 0.01 delta_0 and monotone
  std::string verdict;                    // "Q-compact-evidence" or "inconclusive"
  int samples = 0;                        // decomposition route only
  bool certificates_ok = true;
};

struct DiagnosticOptions {
  int samples = 200;
  int support = 0;        // 0 = d
  double threshold = 0.01;
};

QCompactDiagnostic q_compact_diagnostic(const ModelOperator& model, const ApproximationScheme& scheme, int n_max,
                                        int d, const SolverSettings& s = {}, const DiagnosticOptions& opts = {});

struct GammaTable {
  std::vector<int> d_list;
  std::vector<int> n_list;
  std::vector<std::vector<SNumberValue>> values;  // values[i][j] = delta_{n_j}(truncate(d_i))
  double estimate = 0.0;                          // large d, then large n
  bool monotone_in_n = true;
  bool monotone_in_d = true;
};

GammaTable gamma_estimate(const ModelOperator& model, const std::vector<int>& d_list, const std::vector<int>& n_list,
                          const SolverSettings& s = {});

/// inf ||T - B|| over B whose range lies in one member of Q_n.
SNumberValue scheme_approximation_number(const LinearOperator& t, int n, const ApproximationScheme& scheme,
                                         const SolverSettings& s = {});

struct TauRow {
  int n = 1;
  BracketPair pair;  // tau_n(T) against tau_n(T^*)
};

std::vector<TauRow> tau_duality_check(const LinearOperator& t, int n_max, const SolverSettings& s = {},
                                      double tol = 1e-3);

}  // namespace snum
