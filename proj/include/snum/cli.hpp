#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "snum/schemes.hpp"
#include "snum/snumbers.hpp"
#include "snum/spaces.hpp"

namespace snum {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSpecVersion = 1;
inline constexpr int kMaxDim = 64;

enum class OperatorType { matrix, diagonal, weighted_shift, canonical_injection, zero };

struct OperatorDesc {
  std::string name;
  OperatorType type = OperatorType::matrix;
  Matrix matrix;                               // matrix only
  NormExp p = NormExp::two, q = NormExp::two;
  std::optional<SequenceGenerator> sequence;   // lambda or w
  std::vector<int> dims;                       // one instance per entry

  bool is_model() const { return type != OperatorType::matrix; }
  ModelOperator model() const;
  LinearOperator instance(int d) const;
};

struct SchemeDesc {
  SchemeKind kind = SchemeKind::dim_subspaces;
  std::string path;  // custom member list
  ApproximationScheme build() const;
};

struct ComputationDesc {
  std::string kind;  // a c d tau profile duality axioms scheme_width q_diag gamma injection_study tau_duality scheme_approx
  std::string label;
  std::string op;    // operator name, empty when not used
  std::vector<int> n;
  int n_max = 0;     // 0 = largest admissible
  SKind s_kind = SKind::approximation;
  std::optional<SchemeDesc> scheme;
  double tol = 1e-3;
  // axioms
  int instances = 20;
  int max_dim = 4;
  NormExp p = NormExp::two, q = NormExp::two;
  // q_diag
  int samples = 200;
  double threshold = 0.01;
  // injection_study
  std::vector<int> d;
};

struct ExperimentSpec {
  std::string source;       // path or "<string>"
  std::string base_dir;     // directory of the spec file
  std::uint64_t seed = 0;
  SolverSettings solver;
  std::vector<OperatorDesc> operators;
  std::vector<ComputationDesc> computations;
  std::vector<std::string> formats{"csv"};
  std::string out_path = "snum_out";

  const OperatorDesc& find_operator(const std::string& name) const;
};

/// Throws Error(parse_error) with line and column, or Error(validation_error)
/// naming the offending field.
ExperimentSpec parse_spec(const std::string& text, const std::string& source = "<string>",
                          const std::string& base_dir = ".");
ExperimentSpec load_spec(const std::string& path);

using Cell = std::variant<long long, double, std::string, bool>;

struct Table {
  std::string name;  // file stem
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  double wall_time = 0.0;
};

/// Runs every computation in spec order.
std::vector<Table> run_computations(const ExperimentSpec& spec);

std::string to_csv(const Table& t);
std::string to_json_text(const Table& t);
/// Two columns (n, upper), one '#'-headed block per series; empty when the table has no n column.
std::string to_plotdata(const Table& t);

struct RunOutput {
  std::vector<std::string> files;
  double wall_time = 0.0;
};

/// Writes the tables in spec order plus manifest.json.
RunOutput write_outputs(const ExperimentSpec& spec, const std::vector<Table>& tables, const std::string& dir,
                        double wall_time);

/// Exit codes: 0 ok, 2 parse or validation error, 3 solver error.
int cmd_run(const std::string& spec_path, const std::optional<std::string>& out_dir,
            const std::optional<std::uint64_t>& seed, std::ostream& out, std::ostream& err);
int cmd_validate(const std::string& spec_path, std::ostream& out, std::ostream& err);
int cmd_regen(const std::string& dir, const std::string& filter, std::ostream& out, std::ostream& err);

}  // namespace snum
