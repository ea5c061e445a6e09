#include "snum/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <json.hpp>

#include "snum/fixtures.hpp"
#include "snum/hash.hpp"
#include "snum/linalg.hpp"
#include "snum/parallel.hpp"

#ifndef SNUM_FIXTURE_DIR
#define SNUM_FIXTURE_DIR "fixtures"
#endif

namespace snum {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::validation_error, "field '" + field + "': " + what);
}

std::string at_key(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at_index(const std::string& path, size_t i) { return path + "[" + std::to_string(i) + "]"; }

void require_object(const json& o, const std::string& path) {
  if (!o.is_object()) invalid(path, "expected an object");
}

void check_keys(const json& o, const std::string& path, const std::set<std::string>& allowed) {
  require_object(o, path);
  for (auto it = o.begin(); it != o.end(); ++it)
    if (!allowed.count(it.key())) invalid(at_key(path, it.key()), "unknown field");
}

long long get_int(const json& o, const std::string& key, const std::string& path, std::optional<long long> def = {}) {
  if (!o.contains(key)) {
    if (!def) invalid(at_key(path, key), "required");
    return *def;
  }
  const json& v = o[key];
  if (!v.is_number_integer()) invalid(at_key(path, key), "expected an integer");
  return v.get<long long>();
}

double get_double(const json& o, const std::string& key, const std::string& path, std::optional<double> def = {}) {
  if (!o.contains(key)) {
    if (!def) invalid(at_key(path, key), "required");
    return *def;
  }
  const json& v = o[key];
  if (!v.is_number()) invalid(at_key(path, key), "expected a number");
  return v.get<double>();
}

bool get_bool(const json& o, const std::string& key, const std::string& path, bool def) {
  if (!o.contains(key)) return def;
  if (!o[key].is_boolean()) invalid(at_key(path, key), "expected true or false");
  return o[key].get<bool>();
}

std::string get_string(const json& o, const std::string& key, const std::string& path,
                       std::optional<std::string> def = {}) {
  if (!o.contains(key)) {
    if (!def) invalid(at_key(path, key), "required");
    return *def;
  }
  if (!o[key].is_string()) invalid(at_key(path, key), "expected a string");
  return o[key].get<std::string>();
}

NormExp to_p(const json& v, const std::string& field) {
  try {
    if (v.is_number_integer()) return parse_norm_exp(std::to_string(v.get<long long>()));
    if (v.is_string()) return parse_norm_exp(v.get<std::string>());
  } catch (const Error&) {
  }
  invalid(field, "expected 1, 2 or \"inf\"");
}

NormExp get_p(const json& o, const std::string& key, const std::string& path, std::optional<NormExp> def = {}) {
  if (!o.contains(key)) {
    if (!def) invalid(at_key(path, key), "required");
    return *def;
  }
  return to_p(o[key], at_key(path, key));
}

// int | [ints] | {"from": a, "to": b}
std::vector<int> get_int_set(const json& o, const std::string& key, const std::string& path) {
  const std::string field = at_key(path, key);
  if (!o.contains(key)) invalid(field, "required");
  const json& v = o[key];
  std::vector<int> out;
  if (v.is_number_integer()) {
    out.push_back(v.get<int>());
  } else if (v.is_array()) {
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) invalid(at_index(field, i), "expected an integer");
      out.push_back(v[i].get<int>());
    }
  } else if (v.is_object()) {
    check_keys(v, field, {"from", "to"});
    const long long a = get_int(v, "from", field), b = get_int(v, "to", field);
    if (b < a) invalid(field, "'to' is smaller than 'from'");
    if (b - a > 10000) invalid(field, "range too long");
    for (long long k = a; k <= b; ++k) out.push_back(static_cast<int>(k));
  } else {
    invalid(field, "expected an integer, a list or {\"from\", \"to\"}");
  }
  if (out.empty()) invalid(field, "empty");
  return out;
}

SequenceGenerator parse_sequence(const json& v, const std::string& field) {
  if (v.is_array()) {
    std::vector<double> vals;
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) invalid(at_index(field, i), "expected a number");
      vals.push_back(v[i].get<double>());
    }
    if (vals.empty()) invalid(field, "empty list");
    return SequenceGenerator::list(vals);
  }
  check_keys(v, field, {"form", "value", "ratio", "lo", "hi", "seed", "values", "tail", "bound"});
  const std::string form = get_string(v, "form", field);
  std::optional<SequenceGenerator> g;
  try {
    if (form == "constant") {
      g = SequenceGenerator::constant(get_double(v, "value", field));
    } else if (form == "harmonic") {
      g = SequenceGenerator::harmonic();
    } else if (form == "geometric") {
      g = SequenceGenerator::geometric(get_double(v, "ratio", field));
    } else if (form == "two_plus_sin") {
      g = SequenceGenerator::two_plus_sin();
    } else if (form == "random_bounded") {
      g = SequenceGenerator::random_bounded(get_double(v, "lo", field), get_double(v, "hi", field),
                                            static_cast<std::uint64_t>(get_int(v, "seed", field, 0)));
    } else if (form == "list") {
      const std::string tail = get_string(v, "tail", field, "zero");
      TailRule rule = TailRule::zero;
      if (tail == "repeat_last") rule = TailRule::repeat_last;
      else if (tail == "cycle") rule = TailRule::cycle;
      else if (tail != "zero") invalid(at_key(field, "tail"), "expected zero, repeat_last or cycle");
      const std::string vf = at_key(field, "values");
      if (!v.contains("values") || !v["values"].is_array() || v["values"].empty()) invalid(vf, "expected a non-empty list");
      std::vector<double> vals;
      for (size_t i = 0; i < v["values"].size(); ++i) {
        if (!v["values"][i].is_number()) invalid(at_index(vf, i), "expected a number");
        vals.push_back(v["values"][i].get<double>());
      }
      g = SequenceGenerator::list(vals, rule);
    } else {
      invalid(at_key(field, "form"), "unknown form '" + form + "'");
    }
    if (v.contains("bound")) g->declare_bound(get_double(v, "bound", field));
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::validation_error) throw;
    invalid(field, ex.what());
  }
  return *g;
}

OperatorType parse_operator_type(const std::string& s, const std::string& field) {
  if (s == "matrix") return OperatorType::matrix;
  if (s == "diagonal") return OperatorType::diagonal;
  if (s == "weighted_shift") return OperatorType::weighted_shift;
  if (s == "canonical_injection") return OperatorType::canonical_injection;
  if (s == "zero") return OperatorType::zero;
  invalid(field, "unknown operator type '" + s + "'");
}

void parse_space(const json& o, const std::string& path, OperatorDesc& op, bool has_p, NormExp default_p) {
  const std::string field = at_key(path, "space");
  if (!o.contains("space")) invalid(field, "required");
  const json& sp = o["space"];
  if (has_p) check_keys(sp, field, {"p", "dim", "dims"});
  else check_keys(sp, field, {"dim", "dims"});
  if (has_p) op.p = op.q = get_p(sp, "p", field, default_p);
  if (sp.contains("dim") == sp.contains("dims")) invalid(field, "give exactly one of dim or dims");
  op.dims = get_int_set(sp, sp.contains("dim") ? "dim" : "dims", field);
  for (int d : op.dims)
    if (d < 1 || d > kMaxDim) invalid(field, "dimension " + std::to_string(d) + " outside 1.." + std::to_string(kMaxDim));
}

OperatorDesc parse_operator(const json& o, const std::string& path) {
  require_object(o, path);
  OperatorDesc op;
  op.name = get_string(o, "name", path);
  if (op.name.empty()) invalid(at_key(path, "name"), "empty");
  op.type = parse_operator_type(get_string(o, "type", path), at_key(path, "type"));
  switch (op.type) {
    case OperatorType::matrix: {
      check_keys(o, path, {"name", "type", "matrix", "domain", "codomain"});
      const std::string field = at_key(path, "matrix");
      if (!o.contains("matrix") || !o["matrix"].is_array() || o["matrix"].empty()) invalid(field, "expected a list of rows");
      const json& rows = o["matrix"];
      const size_t cols = rows[0].is_array() ? rows[0].size() : 0;
      if (cols == 0) invalid(at_index(field, 0), "expected a non-empty row");
      if (rows.size() > kMaxDim || cols > kMaxDim) invalid(field, "dimensions exceed " + std::to_string(kMaxDim));
      op.matrix.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
      for (size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].is_array() || rows[i].size() != cols) invalid(at_index(field, i), "rows must have equal length");
        for (size_t j = 0; j < cols; ++j) {
          const json& x = rows[i][j];
          if (!x.is_number() || !std::isfinite(x.get<double>())) invalid(at_index(at_index(field, i), j), "expected a finite number");
          op.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x.get<double>();
        }
      }
      op.p = get_p(o, "domain", path);
      op.q = get_p(o, "codomain", path);
      op.dims = {static_cast<int>(cols)};
      break;
    }
    case OperatorType::diagonal:
      check_keys(o, path, {"name", "type", "sequence", "space"});
      if (!o.contains("sequence")) invalid(at_key(path, "sequence"), "required");
      op.sequence = parse_sequence(o["sequence"], at_key(path, "sequence"));
      parse_space(o, path, op, true, NormExp::two);
      break;
    case OperatorType::weighted_shift:
      check_keys(o, path, {"name", "type", "weights", "space"});
      if (!o.contains("weights")) invalid(at_key(path, "weights"), "required");
      op.sequence = parse_sequence(o["weights"], at_key(path, "weights"));
      parse_space(o, path, op, true, NormExp::inf);
      break;
    case OperatorType::canonical_injection:
      check_keys(o, path, {"name", "type", "space"});
      parse_space(o, path, op, false, NormExp::one);
      op.p = NormExp::one;
      op.q = NormExp::inf;
      break;
    case OperatorType::zero:
      check_keys(o, path, {"name", "type", "space"});
      parse_space(o, path, op, true, NormExp::two);
      break;
  }
  return op;
}

SchemeDesc parse_scheme(const json& o, const std::string& path, const std::string& base_dir) {
  const std::string field = at_key(path, "scheme");
  if (!o.contains("scheme")) invalid(field, "required");
  const json& v = o["scheme"];
  SchemeDesc d;
  if (v.is_string()) {
    try {
      d.kind = parse_scheme_kind(v.get<std::string>());
    } catch (const Error&) {
      invalid(field, "unknown scheme '" + v.get<std::string>() + "'");
    }
    if (d.kind == SchemeKind::custom) invalid(field, "custom schemes are given as {\"custom\": path}");
    return d;
  }
  check_keys(v, field, {"custom"});
  d.kind = SchemeKind::custom;
  d.path = get_string(v, "custom", field);
  if (fs::path(d.path).is_relative()) d.path = (fs::path(base_dir) / d.path).string();
  if (!fs::exists(d.path)) invalid(at_key(field, "custom"), "file not found: " + d.path);
  try {
    (void)d.build();
  } catch (const Error& ex) {
    invalid(at_key(field, "custom"), ex.what());
  }
  return d;
}

const std::set<std::string> kSKinds{"a", "c", "d", "tau"};

ComputationDesc parse_computation(const json& o, const std::string& path, const ExperimentSpec& spec) {
  require_object(o, path);
  ComputationDesc c;
  c.kind = get_string(o, "kind", path);
  c.label = get_string(o, "label", path, "");
  static const std::map<std::string, std::set<std::string>> keys{
      {"a", {"operator", "n"}},
      {"c", {"operator", "n"}},
      {"d", {"operator", "n"}},
      {"tau", {"operator", "n"}},
      {"profile", {"operator", "s_kind", "n_max"}},
      {"duality", {"operator", "n_max", "tol"}},
      {"tau_duality", {"operator", "n_max", "tol"}},
      {"axioms", {"s_kind", "instances", "max_dim", "p", "q", "tol"}},
      {"scheme_width", {"operator", "scheme", "n"}},
      {"scheme_approx", {"operator", "scheme", "n"}},
      {"q_diag", {"operator", "scheme", "n_max", "samples", "threshold"}},
      {"gamma", {"operator", "n"}},
      {"injection_study", {"d", "n"}},
  };
  auto it = keys.find(c.kind);
  if (it == keys.end()) invalid(at_key(path, "kind"), "unknown computation '" + c.kind + "'");
  std::set<std::string> allowed = it->second;
  allowed.insert({"kind", "label"});
  check_keys(o, path, allowed);
  for (char ch : c.label)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.'))
      invalid(at_key(path, "label"), "use letters, digits, '_', '-' or '.'");

  const OperatorDesc* op = nullptr;
  if (allowed.count("operator")) {
    c.op = get_string(o, "operator", path);
    try {
      op = &spec.find_operator(c.op);
    } catch (const Error&) {
      invalid(at_key(path, "operator"), "no operator named '" + c.op + "'");
    }
  }
  if (allowed.count("s_kind")) {
    const std::string k = get_string(o, "s_kind", path, "a");
    if (!kSKinds.count(k)) invalid(at_key(path, "s_kind"), "expected a, c, d or tau");
    c.s_kind = parse_skind(k);
  }
  if (kSKinds.count(c.kind)) c.s_kind = parse_skind(c.kind);
  if (allowed.count("scheme")) c.scheme = parse_scheme(o, path, spec.base_dir);
  if (allowed.count("tol")) {
    const bool hilbert = c.kind == "axioms" && get_p(o, "p", path, NormExp::two) == NormExp::two &&
                         get_p(o, "q", path, NormExp::two) == NormExp::two;
    c.tol = get_double(o, "tol", path, c.kind == "axioms" ? (hilbert ? 1e-9 : 1e-4) : 1e-3);
    if (!(c.tol > 0.0)) invalid(at_key(path, "tol"), "must be positive");
  }
  if (allowed.count("n_max")) {
    c.n_max = static_cast<int>(get_int(o, "n_max", path, c.kind == "q_diag" ? std::optional<long long>{} : 0));
    if (c.n_max < 0 || (c.kind != "q_diag" && c.n_max == 0 && o.contains("n_max")))
      invalid(at_key(path, "n_max"), "must be positive");
  }

  auto check_model = [&] {
    if (!op->is_model()) invalid(at_key(path, "operator"), "'" + c.op + "' is a matrix, a model operator is required");
  };
  if (kSKinds.count(c.kind)) {
    c.n = get_int_set(o, "n", path);
    for (int d : op->dims) {
      const int top = max_index(c.s_kind, op->instance(d));
      for (int n : c.n)
        if (n < 1 || n > top)
          invalid(at_key(path, "n"), "index " + std::to_string(n) + " outside 1.." + std::to_string(top) + " for d=" + std::to_string(d));
    }
  } else if (c.kind == "profile") {
    for (int d : op->dims) {
      const int top = max_index(c.s_kind, op->instance(d));
      if (c.n_max > top) invalid(at_key(path, "n_max"), "exceeds " + std::to_string(top) + " for d=" + std::to_string(d));
    }
  } else if (c.kind == "axioms") {
    c.instances = static_cast<int>(get_int(o, "instances", path, 20));
    c.max_dim = static_cast<int>(get_int(o, "max_dim", path, 4));
    c.p = get_p(o, "p", path, NormExp::two);
    c.q = get_p(o, "q", path, NormExp::two);
    if (c.instances < 1 || c.instances > 10000) invalid(at_key(path, "instances"), "outside 1..10000");
    if (c.max_dim < 1 || c.max_dim > 8) invalid(at_key(path, "max_dim"), "outside 1..8");
  } else if (c.kind == "scheme_width" || c.kind == "scheme_approx") {
    c.n = get_int_set(o, "n", path);
    for (int n : c.n)
      if (n < 0 || n > kMaxDim) invalid(at_key(path, "n"), "scheme index " + std::to_string(n) + " outside 0.." + std::to_string(kMaxDim));
  } else if (c.kind == "q_diag") {
    check_model();
    c.samples = static_cast<int>(get_int(o, "samples", path, 200));
    c.threshold = get_double(o, "threshold", path, 0.01);
    if (c.samples < 1 || c.samples > 100000) invalid(at_key(path, "samples"), "outside 1..100000");
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) invalid(at_key(path, "threshold"), "outside (0, 1)");
  } else if (c.kind == "gamma") {
    check_model();
    c.n = get_int_set(o, "n", path);
    for (int n : c.n)
      if (n < 1) invalid(at_key(path, "n"), "indices start at 1");
  } else if (c.kind == "injection_study") {
    c.d = get_int_set(o, "d", path);
    c.n = {static_cast<int>(get_int(o, "n", path))};
    const int n = c.n.front();
    if (n < 1 || n > 3) invalid(at_key(path, "n"), "outside 1..3");
    for (int d : c.d)
      if (d < 1 || d > 6 || n > d + 1) invalid(at_key(path, "d"), "dimension " + std::to_string(d) + " outside 1..6 or below n-1");
  }
  return c;
}

SolverSettings parse_solver(const json& o, const std::string& path) {
  check_keys(o, path, {"restarts", "max_iters", "tol", "threads", "oracle_refine", "vertex_cap", "net_mode",
                       "net_tolerance", "net_cap"});
  SolverSettings s;
  s.restarts = static_cast<int>(get_int(o, "restarts", path, s.restarts));
  s.max_iters = static_cast<int>(get_int(o, "max_iters", path, s.max_iters));
  s.tol = get_double(o, "tol", path, s.tol);
  s.threads = static_cast<int>(get_int(o, "threads", path, s.threads));
  s.oracle_refine = get_bool(o, "oracle_refine", path, s.oracle_refine);
  s.vertex_cap = static_cast<int>(get_int(o, "vertex_cap", path, s.vertex_cap));
  s.net_mode = get_bool(o, "net_mode", path, s.net_mode);
  s.net_tolerance = get_double(o, "net_tolerance", path, s.net_tolerance);
  s.net_cap = static_cast<int>(get_int(o, "net_cap", path, s.net_cap));
  try {
    s.validate();
  } catch (const Error& ex) {
    invalid(path, ex.what());
  }
  return s;
}

// ---- running ----

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string cell_text(const Cell& c) {
  if (auto p = std::get_if<long long>(&c)) return std::to_string(*p);
  if (auto p = std::get_if<double>(&c)) return fmt(*p);
  if (auto p = std::get_if<bool>(&c)) return *p ? "true" : "false";
  return std::get<std::string>(c);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

using Row = std::vector<Cell>;

void add_value(Row& r, const SNumberValue& v) {
  r.push_back(v.lower);
  r.push_back(v.upper);
  r.push_back(to_string(v.method));
}

Cell I(long long v) { return v; }

class Runner {
 public:
  Runner(const ExperimentSpec& spec, SolverSettings s) : spec_(spec), s_(std::move(s)) {}

  Table run(const ComputationDesc& c, size_t index) {
    Table t;
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%02zu_", index + 1);
    t.name = c.label.empty() ? prefix + c.kind + (c.op.empty() ? "" : "_" + c.op) : c.label;
    t.kind = c.kind;
    const OperatorDesc* op = c.op.empty() ? nullptr : &spec_.find_operator(c.op);
    if (kSKinds.count(c.kind)) {
      t.columns = {"operator", "d", "kind", "n", "lower", "upper", "method", "lower_method"};
      for (int d : op->dims) {
        const LinearOperator lin = op->instance(d);
        for (int n : c.n) {
          const SNumberValue v = s_number(c.s_kind, lin, n, s_);
          Row r{op->name, I(d), c.kind, I(n)};
          add_value(r, v);
          r.push_back(v.lower_method);
          t.rows.push_back(r);
        }
      }
    } else if (c.kind == "profile") {
      t.columns = {"operator", "d", "kind", "n", "lower", "upper", "method", "lower_method"};
      for (int d : op->dims) {
        const LinearOperator lin = op->instance(d);
        const int n_max = c.n_max ? c.n_max : max_index(c.s_kind, lin);
        for (const SNumberValue& v : s_number_profile(c.s_kind, lin, n_max, s_)) {
          Row r{op->name, I(d), short_kind(c.s_kind), I(v.n)};
          add_value(r, v);
          r.push_back(v.lower_method);
          t.rows.push_back(r);
        }
      }
    } else if (c.kind == "duality" || c.kind == "tau_duality") {
      t.columns = {"operator", "d", "n", "identity", "lower", "upper", "method",
                   "rhs_lower", "rhs_upper", "rhs_method", "separation", "pass"};
      for (int d : op->dims) {
        const LinearOperator lin = op->instance(d);
        const int n_max = c.n_max ? c.n_max : static_cast<int>(std::min(lin.matrix().rows(), lin.matrix().cols()));
        auto add = [&](int n, const std::string& id, const BracketPair& b) {
          Row r{op->name, I(d), I(n), id};
          add_value(r, b.lhs);
          add_value(r, b.rhs);
          r.push_back(b.separation);
          r.push_back(b.pass);
          t.rows.push_back(r);
        };
        if (c.kind == "duality") {
          for (const DualityRow& row : duality_report(lin, n_max, s_, c.tol)) {
            add(row.n, "a(T)=a(T*)", row.approximation);
            add(row.n, "d(T)=d(T*)", row.kolmogorov);
            add(row.n, "c(T)=c(T*)", row.gelfand);
            add(row.n, "d(T*)=c(T)", row.kolmogorov_gelfand);
            if (row.has_symmetrized) add(row.n, "tau(T)=tau(T*)", row.symmetrized);
          }
        } else {
          for (const TauRow& row : tau_duality_check(lin, n_max, s_, c.tol)) add(row.n, "tau(T)=tau(T*)", row.pair);
        }
      }
    } else if (c.kind == "axioms") {
      t.columns = {"kind", "p", "q", "axiom", "instances", "slack", "certified_violation", "tol", "pass", "worst"};
      const AxiomReport rep = axiom_suite(c.s_kind, c.instances, AxiomDims{c.max_dim, c.p, c.q}, s_, c.tol);
      for (const AxiomCheck& a : rep.checks)
        t.rows.push_back({short_kind(c.s_kind), to_string(c.p), to_string(c.q), a.name, I(a.instances), a.slack,
                          a.certified_violation, rep.tol, a.pass, a.worst});
      t.rows.push_back({short_kind(c.s_kind), to_string(c.p), to_string(c.q), "literal_additivity_logged",
                        I(c.instances), rep.literal_additivity_slack, rep.literal_additivity_slack, rep.tol, true,
                        "s_{m+n-1}(S+T) <= s_m(T) + s_n(T), not an axiom"});
    } else if (c.kind == "scheme_width") {
      t.columns = {"operator", "d", "scheme", "n", "lower", "upper", "method", "radius", "validated"};
      const ApproximationScheme q = c.scheme->build();
      for (int d : op->dims) {
        const LinearOperator lin = op->instance(d);
        for (int n : c.n) {
          const GeneralizedWidth w = generalized_kolmogorov(lin, n, q, s_);
          t.rows.push_back({op->name, I(d), q.name, I(n), w.lower, w.upper, to_string(w.method), w.radius, w.validated});
        }
      }
    } else if (c.kind == "scheme_approx") {
      t.columns = {"operator", "d", "scheme", "n", "lower", "upper", "method"};
      const ApproximationScheme q = c.scheme->build();
      for (int d : op->dims) {
        const LinearOperator lin = op->instance(d);
        for (int n : c.n) {
          Row r{op->name, I(d), q.name, I(n)};
          add_value(r, scheme_approximation_number(lin, n, q, s_));
          t.rows.push_back(r);
        }
      }
    } else if (c.kind == "q_diag") {
      t.columns = {"operator", "d", "scheme", "n", "lower", "upper", "method", "radius",
                   "monotone", "evidence", "verdict", "certificates_ok"};
      const ApproximationScheme q = c.scheme->build();
      DiagnosticOptions opts;
      opts.samples = c.samples;
      opts.threshold = c.threshold;
      for (int d : op->dims) {
        const QCompactDiagnostic diag = q_compact_diagnostic(op->model(), q, c.n_max, d, s_, opts);
        for (const GeneralizedWidth& w : diag.widths)
          t.rows.push_back({op->name, I(d), q.name, I(w.n), w.lower, w.upper, to_string(w.method), w.radius,
                            diag.monotone, diag.evidence, diag.verdict, diag.certificates_ok});
      }
    } else if (c.kind == "gamma") {
      t.columns = {"operator", "d", "n", "lower", "upper", "method", "monotone_in_n", "monotone_in_d", "estimate"};
      const GammaTable g = gamma_estimate(op->model(), op->dims, c.n, s_);
      for (size_t i = 0; i < g.d_list.size(); ++i)
        for (size_t j = 0; j < g.n_list.size(); ++j) {
          Row r{op->name, I(g.d_list[i]), I(g.n_list[j])};
          add_value(r, g.values[i][j]);
          r.push_back(g.monotone_in_n);
          r.push_back(g.monotone_in_d);
          r.push_back(g.estimate);
          t.rows.push_back(r);
        }
    } else if (c.kind == "injection_study") {
      t.columns = {"d", "n", "lower", "upper", "method", "adjoint_lower", "adjoint_upper", "adjoint_method",
                   "gap", "forward_hash", "adjoint_hash", "adjoint_dominated", "monotone_in_d"};
      const InjectionStudy st = injection_gap_study(c.d, c.n.front(), s_);
      for (const InjectionRow& row : st.rows) {
        Row r{I(row.d), I(c.n.front())};
        add_value(r, row.forward);
        add_value(r, row.adjoint);
        r.push_back(row.gap);
        r.push_back(hex64(fnv1a64(row.forward_transcript)));
        r.push_back(hex64(fnv1a64(row.adjoint_transcript)));
        r.push_back(st.adjoint_dominated);
        r.push_back(st.monotone_in_d);
        t.rows.push_back(r);
      }
    }
    return t;
  }

 private:
  static std::string short_kind(SKind k) {
    switch (k) {
      case SKind::approximation: return "a";
      case SKind::kolmogorov: return "d";
      case SKind::gelfand: return "c";
      case SKind::symmetrized: return "tau";
    }
    return "?";
  }

  const ExperimentSpec& spec_;
  SolverSettings s_;
};

size_t error_offset(const std::string& text, size_t byte, int& line, int& col) {
  line = 1;
  col = 1;
  const size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return end;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path.string());
  out << text;
}

}  // namespace

ModelOperator OperatorDesc::model() const {
  switch (type) {
    case OperatorType::diagonal: return ModelOperator::diagonal(*sequence, p);
    case OperatorType::weighted_shift: return ModelOperator::weighted_shift(*sequence, p);
    case OperatorType::canonical_injection: return ModelOperator::canonical_injection();
    case OperatorType::zero: return ModelOperator::zero(p);
    case OperatorType::matrix: break;
  }
  throw Error(ErrorCode::invalid_argument, "operator '" + name + "' is not a model operator");
}

LinearOperator OperatorDesc::instance(int d) const {
  if (type == OperatorType::matrix) return LinearOperator(matrix, p, q);
  return model().truncate(d);
}

// A custom scheme file lists members by index: {"name": ..., "members": {"1": [frame, ...], ...}},
// frames as lists of rows. Q_n holds every subspace of a listed frame with index <= n.
ApproximationScheme SchemeDesc::build() const {
  if (kind != SchemeKind::custom) return make_scheme(kind);
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::parse_error, path + ": " + ex.what());
  }
  check_keys(doc, path, {"name", "members"});
  const std::string name = get_string(doc, "name", path, "custom");
  if (!doc.contains("members") || !doc["members"].is_object()) invalid(at_key(path, "members"), "expected an object");
  auto listed = std::make_shared<std::vector<std::pair<int, Matrix>>>();
  for (auto it = doc["members"].begin(); it != doc["members"].end(); ++it) {
    const std::string field = at_key(path, "members." + it.key());
    int n = 0;
    try {
      n = std::stoi(it.key());
    } catch (...) {
      invalid(field, "keys are scheme indices");
    }
    if (n < 1 || !it.value().is_array()) invalid(field, "expected an index >= 1 with a list of frames");
    for (size_t k = 0; k < it.value().size(); ++k) {
      const json& rows = it.value()[k];
      const std::string ff = at_index(field, k);
      if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty()) invalid(ff, "expected a matrix");
      Matrix f(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
      for (size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].is_array() || rows[i].size() != rows[0].size()) invalid(ff, "ragged matrix");
        for (size_t j = 0; j < rows[i].size(); ++j) {
          if (!rows[i][j].is_number()) invalid(ff, "expected numbers");
          f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
        }
      }
      listed->push_back({n, f});
    }
  }
  auto member = [listed](int n, const Matrix& f) {
    if (f.cols() == 0 || numerical_rank(f) == 0) return true;
    for (const auto& [k, g] : *listed) {
      if (k > n || g.rows() != f.rows()) continue;
      Matrix both(g.rows(), g.cols() + f.cols());
      both << g, f;
      if (numerical_rank(both) == numerical_rank(g)) return true;
    }
    return false;
  };
  auto candidates = [listed](int n, int dim) {
    std::vector<Matrix> out;
    for (const auto& [k, g] : *listed)
      if (k <= n && g.rows() == dim) out.push_back(g);
    return out;
  };
  auto sample = [listed](Rng& rng, int n, int dim) -> Matrix {
    std::vector<const Matrix*> pool;
    for (const auto& [k, g] : *listed)
      if (k <= n && g.rows() == dim) pool.push_back(&g);
    if (pool.empty()) return Matrix::Zero(dim, 1);
    const Matrix& g = *pool[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
    return g * rng.normal_matrix(static_cast<int>(g.cols()), 1);
  };
  return custom_scheme(name, member, candidates, sample);
}

const OperatorDesc& ExperimentSpec::find_operator(const std::string& name) const {
  for (const OperatorDesc& op : operators)
    if (op.name == name) return op;
  throw Error(ErrorCode::validation_error, "no operator named '" + name + "'");
}

ExperimentSpec parse_spec(const std::string& text, const std::string& source, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    int line = 0, col = 0;
    error_offset(text, ex.byte, line, col);
    std::string what = ex.what();
    if (auto pos = what.find("] "); pos != std::string::npos) what = what.substr(pos + 2);
    throw Error(ErrorCode::parse_error, source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                            ": line " + std::to_string(line) + ", column " + std::to_string(col) +
                                            ": " + what);
  }
  ExperimentSpec spec;
  spec.source = source;
  spec.base_dir = base_dir;
  check_keys(doc, "", {"spec_version", "description", "seed", "solver", "operators", "computations", "output"});
  const long long version = get_int(doc, "spec_version", "");
  if (version != kSpecVersion) invalid("spec_version", "unsupported version " + std::to_string(version));
  if (doc.contains("description") && !doc["description"].is_string()) invalid("description", "expected a string");
  const long long seed = get_int(doc, "seed", "", 0);
  if (seed < 0) invalid("seed", "must be non-negative");
  spec.seed = static_cast<std::uint64_t>(seed);
  if (doc.contains("solver")) spec.solver = parse_solver(doc["solver"], "solver");
  spec.solver.seed = spec.seed;

  if (doc.contains("operators")) {
    if (!doc["operators"].is_array()) invalid("operators", "expected a list");
    for (size_t i = 0; i < doc["operators"].size(); ++i) {
      OperatorDesc op = parse_operator(doc["operators"][i], at_index("operators", i));
      for (const OperatorDesc& o : spec.operators)
        if (o.name == op.name) invalid(at_key(at_index("operators", i), "name"), "duplicate name '" + op.name + "'");
      spec.operators.push_back(std::move(op));
    }
  }
  if (!doc.contains("computations")) invalid("computations", "required");
  if (!doc["computations"].is_array()) invalid("computations", "expected a list");
  if (doc["computations"].empty()) invalid("computations", "empty list, nothing to run");
  std::set<std::string> names;
  for (size_t i = 0; i < doc["computations"].size(); ++i) {
    ComputationDesc c = parse_computation(doc["computations"][i], at_index("computations", i), spec);
    if (!c.label.empty() && !names.insert(c.label).second)
      invalid(at_key(at_index("computations", i), "label"), "duplicate label '" + c.label + "'");
    spec.computations.push_back(std::move(c));
  }

  if (doc.contains("output")) {
    const json& o = doc["output"];
    check_keys(o, "output", {"format", "path"});
    if (o.contains("format")) {
      const json& f = o["format"];
      std::vector<std::string> formats;
      if (f.is_string()) {
        formats.push_back(f.get<std::string>());
      } else if (f.is_array() && !f.empty()) {
        for (size_t i = 0; i < f.size(); ++i) {
          if (!f[i].is_string()) invalid(at_index("output.format", i), "expected a string");
          formats.push_back(f[i].get<std::string>());
        }
      } else {
        invalid("output.format", "expected a format name or a list of them");
      }
      for (const std::string& x : formats)
        if (x != "csv" && x != "json" && x != "plotdata") invalid("output.format", "unknown format '" + x + "'");
      spec.formats = formats;
    }
    spec.out_path = get_string(o, "path", "output", spec.out_path);
  }
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  const fs::path p(path);
  return parse_spec(read_file(path), path, p.has_parent_path() ? p.parent_path().string() : ".");
}

std::vector<Table> run_computations(const ExperimentSpec& spec) {
  SolverSettings s = spec.solver;
  s.seed = spec.seed;
  int threads = resolve_threads(s.threads);
  if (const char* env = std::getenv("SNUM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) threads = std::min(threads, cap);
  }
  s.threads = threads;
  Runner runner(spec, s);
  std::vector<Table> out;
  for (size_t i = 0; i < spec.computations.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Table t = runner.run(spec.computations[i], i);
    t.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(t));
  }
  return out;
}

std::string to_csv(const Table& t) {
  std::string out;
  for (size_t j = 0; j < t.columns.size(); ++j) out += (j ? "," : "") + csv_field(t.columns[j]);
  out += '\n';
  for (const Row& r : t.rows) {
    for (size_t j = 0; j < r.size(); ++j) out += (j ? "," : "") + csv_field(cell_text(r[j]));
    out += '\n';
  }
  return out;
}

std::string to_json_text(const Table& t) {
  json doc;
  doc["name"] = t.name;
  doc["kind"] = t.kind;
  doc["columns"] = t.columns;
  json rows = json::array();
  for (const Row& r : t.rows) {
    json o;
    for (size_t j = 0; j < r.size(); ++j)
      std::visit([&](const auto& v) { o[t.columns[j]] = v; }, r[j]);
    rows.push_back(o);
  }
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

std::string to_plotdata(const Table& t) {
  auto col = [&](const std::string& name) -> int {
    auto it = std::find(t.columns.begin(), t.columns.end(), name);
    return it == t.columns.end() ? -1 : static_cast<int>(it - t.columns.begin());
  };
  const int n_col = col("n"), up_col = col("upper"), method_col = col("method");
  if (n_col < 0 || up_col < 0) return {};
  std::vector<int> key_cols;
  for (const char* k : {"operator", "d", "kind", "identity", "scheme"})
    if (col(k) >= 0) key_cols.push_back(col(k));
  std::vector<std::string> order;
  std::map<std::string, std::vector<const Row*>> series;
  for (const Row& r : t.rows) {
    std::string key;
    for (int k : key_cols) key += (key.empty() ? "" : " ") + t.columns[static_cast<size_t>(k)] + "=" + cell_text(r[static_cast<size_t>(k)]);
    if (!series.count(key)) order.push_back(key);
    series[key].push_back(&r);
  }
  std::string out;
  for (size_t b = 0; b < order.size(); ++b) {
    const auto& rows = series[order[b]];
    std::vector<std::string> methods;
    if (method_col >= 0)
      for (const Row* r : rows) {
        const std::string m = cell_text((*r)[static_cast<size_t>(method_col)]);
        if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
      }
    std::string ms;
    for (const std::string& m : methods) ms += (ms.empty() ? "" : "|") + m;
    if (b) out += "\n\n";
    out += "# " + t.name + " computation=" + t.kind + (order[b].empty() ? "" : " " + order[b]) +
           (ms.empty() ? "" : " method=" + ms) + "\n";
    out += "# n upper\n";
    for (const Row* r : rows)
      out += cell_text((*r)[static_cast<size_t>(n_col)]) + " " + cell_text((*r)[static_cast<size_t>(up_col)]) + "\n";
  }
  return out;
}

RunOutput write_outputs(const ExperimentSpec& spec, const std::vector<Table>& tables, const std::string& dir,
                        double wall_time) {
  RunOutput res;
  res.wall_time = wall_time;
  fs::create_directories(dir);
  json outputs = json::array();
  for (const Table& t : tables) {
    json files = json::array();
    for (const std::string& f : spec.formats) {
      std::string text, ext;
      if (f == "csv") text = to_csv(t), ext = ".csv";
      else if (f == "json") text = to_json_text(t), ext = ".json";
      else text = to_plotdata(t), ext = ".dat";
      if (text.empty()) continue;
      const fs::path p = fs::path(dir) / (t.name + ext);
      write_file(p, text);
      res.files.push_back(p.string());
      files.push_back(p.filename().string());
    }
    outputs.push_back({{"name", t.name}, {"computation", t.kind}, {"rows", t.rows.size()}, {"files", files},
                       {"wall_time_s", t.wall_time}});
  }
  json m;
  m["spec"] = spec.source;
  m["spec_version"] = kSpecVersion;
  m["seed"] = spec.seed;
  m["versions"] = {{"snum", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"compiler", __VERSION__}};
  m["threads"] = spec.solver.threads;
  m["formats"] = spec.formats;
  m["wall_time_s"] = wall_time;
  m["outputs"] = outputs;
  const fs::path mp = fs::path(dir) / "manifest.json";
  write_file(mp, m.dump(2) + "\n");
  res.files.push_back(mp.string());
  return res;
}

int cmd_run(const std::string& spec_path, const std::optional<std::string>& out_dir,
            const std::optional<std::uint64_t>& seed, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec;
  try {
    spec = load_spec(spec_path);
  } catch (const Error& ex) {
    err << "snum: " << ex.what() << "\n";
    return 2;
  }
  if (seed) spec.seed = spec.solver.seed = *seed;
  const std::string dir = out_dir ? *out_dir : spec.out_path;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Table> tables;
  try {
    tables = run_computations(spec);
  } catch (const std::exception& ex) {
    err << "snum: solver error: " << ex.what() << "\n";
    return 3;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    const RunOutput res = write_outputs(spec, tables, dir, wall);
    for (const std::string& f : res.files) out << "wrote " << f << "\n";
  } catch (const std::exception& ex) {
    err << "snum: " << ex.what() << "\n";
    return 3;
  }
  return 0;
}

int cmd_validate(const std::string& spec_path, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentSpec spec = load_spec(spec_path);
    out << "ok: " << spec.operators.size() << " operator(s), " << spec.computations.size() << " computation(s)\n";
    return 0;
  } catch (const Error& ex) {
    err << "snum: " << ex.what() << "\n";
    return 2;
  }
}

int cmd_regen(const std::string& dir, const std::string& filter, std::ostream& out, std::ostream& err) {
  RegenReport rep;
  try {
    rep = regen_fixtures(dir, filter);
  } catch (const std::exception& ex) {
    err << "snum: " << ex.what() << "\n";
    return 3;
  }
  int changed = 0;
  for (const FixtureDiff& d : rep.diffs) {
    if (d.added) {
      out << "added   " << d.id << " value=" << fmt(d.new_value) << " hash=" << d.new_hash << "\n";
    } else if (d.changed) {
      ++changed;
      out << "changed " << d.id << " value " << fmt(d.old_value) << " -> " << fmt(d.new_value)
          << " (delta " << fmt(d.new_value - d.old_value) << ") hash " << d.old_hash << " -> " << d.new_hash << "\n";
    }
  }
  out << rep.touched() << " fixture(s) touched, " << changed << " changed, " << rep.files.size()
      << " file(s) written\n";
  if (!rep.error.empty()) {
    err << "snum: regeneration stopped: " << rep.error << "\n";
    return 3;
  }
  return 0;
}

}  // namespace snum
