#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snum/spaces.hpp"

namespace snum {

enum class SKind { approximation, kolmogorov, gelfand, symmetrized };
enum class Method { hilbert_exact, polyhedral_exact, heuristic };

std::string to_string(SKind k);
std::string to_string(Method m);
/// Accepts the full names and the short forms a, d, c, tau.
SKind parse_skind(std::string_view text);

struct SolverSettings {
  int restarts = 32;
  std::uint64_t seed = 0;
  int max_iters = 40;
  double tol = 1e-9;
  int threads = 0;            // 0 = SNUM_THREADS or 1
  bool oracle_refine = false; // 10x restarts, structured starts, pattern-search polish
  int vertex_cap = 16;
  // Finite nets replace Euclidean balls in the symmetrized surrogate.
  bool net_mode = false;
  double net_tolerance = 0.05;  // relative bracket inflation allowed by the net
  int net_cap = 400;            // maximum net points per side

  /// Throws InvalidArgument unless every field is in range.
  void validate() const;
};

struct SNumberValue {
  SKind kind = SKind::approximation;
  int n = 1;
  double lower = 0.0;
  double upper = 0.0;
  Method method = Method::heuristic;
  std::string lower_method;
  Matrix approximant;   // A with rank(A) <= n - 1 (approximation, symmetrized surrogate)
  Matrix frame;         // columns span G, dim G <= n - 1 (Kolmogorov)
  Matrix functionals;   // rows a_i, at most n - 1 of them (Gelfand)
  // Gelfand: kernel-restriction and epsilon-inequality values of the witness.
  double kernel_value = -1.0;
  double epsilon_value = -1.0;
  // Symmetrized: spread of the equivalent surrogate computations.
  double spread = 0.0;
  bool consistent = true;

  double width() const { return upper - lower; }
};

SNumberValue approximation_number(const LinearOperator& t, int n, const SolverSettings& s = {});
SNumberValue kolmogorov_number(const LinearOperator& t, int n, const SolverSettings& s = {});
SNumberValue gelfand_number(const LinearOperator& t, int n, const SolverSettings& s = {});
SNumberValue symmetrized_number(const LinearOperator& t, int n, const SolverSettings& s = {});
SNumberValue s_number(SKind kind, const LinearOperator& t, int n, const SolverSettings& s = {});

/// s_1..s_{max_n} with brackets made monotone across n (a rank < n witness is
/// admissible for n + 1, and lower bounds propagate downward).
std::vector<SNumberValue> s_number_profile(SKind kind, const LinearOperator& t, int max_n,
                                           const SolverSettings& s = {});

/// Singular values as the common value of all kinds; throws NotHilbert.
std::vector<SNumberValue> hilbert_profile(const LinearOperator& t);

/// Largest index accepted by the solver of `kind` for t.
int max_index(SKind kind, const LinearOperator& t);

/// Sphere net: unit vectors (one per +/- pair) from a grid on the cube surface,
/// with a certified cos of the worst angle to any unit vector.
struct SphereNet {
  Matrix points;
  double cos_angle = 1.0;
};
SphereNet sphere_net(int dim, int per_edge);

// ---- axiom checks ----

struct AxiomCheck {
  AxiomCheck(std::string n = {}) : name(std::move(n)) {}
  std::string name;
  double slack = -1e300;                 // max over instances of upper(LHS) - lower(RHS)
  double certified_violation = -1e300;   // max over instances of lower(LHS) - upper(RHS)
  int instances = 0;
  bool pass = true;
  std::string worst;                     // description of the worst instance
};

struct AxiomReport {
  SKind kind = SKind::approximation;
  std::vector<AxiomCheck> checks;
  double literal_additivity_slack = -1e300;  // s_{m+n-1}(S+T) <= s_m(T) + s_n(T), logged only
  double tol = 1e-9;
  bool all_pass() const;
};

struct AxiomDims {
  int max_dim = 5;
  NormExp p = NormExp::two;
  NormExp q = NormExp::two;
};

AxiomReport axiom_suite(SKind kind, int instance_count, const AxiomDims& dims,
                        const SolverSettings& s = {}, double tol = 1e-9);

// ---- duality ----

struct BracketPair {
  SNumberValue lhs;
  SNumberValue rhs;
  double separation = 0.0;  // max(lhs.lower - rhs.upper, rhs.lower - lhs.upper), <= 0 when overlapping
  bool pass = true;
};

struct DualityRow {
  int n = 1;
  BracketPair approximation;       // a_n(T) vs a_n(T*)
  BracketPair kolmogorov;          // delta_n(T) vs delta_n(T*)
  BracketPair gelfand;             // c_n(T) vs c_n(T*)
  BracketPair kolmogorov_gelfand;  // delta_n(T*) vs c_n(T)
  bool has_symmetrized = false;
  BracketPair symmetrized;         // tau_n(T) vs tau_n(T*)
};

BracketPair compare_brackets(SNumberValue lhs, SNumberValue rhs, double tol);

std::vector<DualityRow> duality_report(const LinearOperator& t, int n_max, const SolverSettings& s = {},
                                       double tol = 1e-9);

// ---- injection study ----

struct InjectionRow {
  int d = 1;
  SNumberValue forward;  // a_n(I_d : l1^d -> linf^d)
  SNumberValue adjoint;  // a_n(I_d^*)
  double gap = 0.0;      // forward.upper - adjoint.upper
  std::string forward_transcript;
  std::string adjoint_transcript;
};

struct InjectionStudy {
  std::vector<InjectionRow> rows;
  bool adjoint_dominated = true;  // a_n(I_d^*) <= a_n(I_d) + tol for every d
  bool monotone_in_d = true;      // brackets non-decreasing in d
};

LinearOperator canonical_injection(int d);
InjectionStudy injection_gap_study(const std::vector<int>& d_list, int n, const SolverSettings& s = {});

}  // namespace snum
