#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "snum/cli.hpp"
#include "snum/oracle.hpp"
#include "snum/schemes.hpp"
#include "snum/snumbers.hpp"
#include "snum/spaces.hpp"

namespace py = pybind11;
using namespace snum;

namespace {

LinearOperator make_op(const Matrix& m, const std::string& p, const std::string& q) {
  return LinearOperator(m, parse_norm_exp(p), parse_norm_exp(q));
}

SolverSettings settings(std::uint64_t seed, bool refine, int restarts) {
  SolverSettings s;
  s.seed = seed;
  s.oracle_refine = refine;
  if (restarts > 0) s.restarts = restarts;
  s.validate();
  return s;
}

py::dict value_dict(const SNumberValue& v) {
  py::dict d;
  d["kind"] = to_string(v.kind);
  d["n"] = v.n;
  d["lower"] = v.lower;
  d["upper"] = v.upper;
  d["method"] = to_string(v.method);
  d["lower_method"] = v.lower_method;
  return d;
}

py::dict pair_dict(const BracketPair& b) {
  py::dict d;
  d["lhs"] = value_dict(b.lhs);
  d["rhs"] = value_dict(b.rhs);
  d["separation"] = b.separation;
  d["pass"] = b.pass;
  return d;
}

py::object cell(const Cell& c) {
  return std::visit([](const auto& v) -> py::object { return py::cast(v); }, c);
}

SequenceGenerator weights(const std::string& form, double value) {
  if (form == "constant") return SequenceGenerator::constant(value);
  if (form == "harmonic") return SequenceGenerator::harmonic();
  if (form == "geometric") return SequenceGenerator::geometric(value);
  if (form == "two_plus_sin") return SequenceGenerator::two_plus_sin();
  throw Error(ErrorCode::invalid_argument, "unknown weight form '" + form + "'");
}

}  // namespace

PYBIND11_MODULE(_snum, m) {
  m.doc() = "s-numbers of finite-dimensional operators";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "SnumError", PyExc_RuntimeError);

  m.def(
      "operator_norm",
      [](const Matrix& t, const std::string& p, const std::string& q) {
        const NormBracket b = operator_norm(make_op(t, p, q));
        return py::make_tuple(b.lower, b.upper, b.exact);
      },
      py::arg("matrix"), py::arg("p") = "2", py::arg("q") = "2",
      "Bracket (lower, upper, exact) for the norm of the matrix from l_p to l_q.");

  m.def(
      "s_number",
      [](const std::string& kind, const Matrix& t, int n, const std::string& p, const std::string& q,
         std::uint64_t seed, bool refine, int restarts) {
        py::gil_scoped_release release;
        const SNumberValue v = s_number(parse_skind(kind), make_op(t, p, q), n, settings(seed, refine, restarts));
        py::gil_scoped_acquire acquire;
        return value_dict(v);
      },
      py::arg("kind"), py::arg("matrix"), py::arg("n"), py::arg("p") = "2", py::arg("q") = "2",
      py::arg("seed") = 0, py::arg("refine") = false, py::arg("restarts") = 0);

  m.def(
      "profile",
      [](const std::string& kind, const Matrix& t, int max_n, const std::string& p, const std::string& q,
         std::uint64_t seed) {
        py::list out;
        for (const SNumberValue& v : s_number_profile(parse_skind(kind), make_op(t, p, q), max_n, settings(seed, false, 0)))
          out.append(value_dict(v));
        return out;
      },
      py::arg("kind"), py::arg("matrix"), py::arg("max_n"), py::arg("p") = "2", py::arg("q") = "2",
      py::arg("seed") = 0);

  m.def(
      "duality_report",
      [](const Matrix& t, int n_max, const std::string& p, const std::string& q, double tol, bool refine) {
        py::list out;
        for (const DualityRow& r : duality_report(make_op(t, p, q), n_max, settings(0, refine, 0), tol)) {
          py::dict d;
          d["n"] = r.n;
          d["approximation"] = pair_dict(r.approximation);
          d["kolmogorov"] = pair_dict(r.kolmogorov);
          d["gelfand"] = pair_dict(r.gelfand);
          d["kolmogorov_gelfand"] = pair_dict(r.kolmogorov_gelfand);
          if (r.has_symmetrized) d["symmetrized"] = pair_dict(r.symmetrized);
          out.append(d);
        }
        return out;
      },
      py::arg("matrix"), py::arg("n_max"), py::arg("p") = "2", py::arg("q") = "2", py::arg("tol") = 1e-9,
      py::arg("refine") = false);

  m.def(
      "brute_rank_approx",
      [](const Matrix& t, int n, const std::string& p, const std::string& q) {
        const OracleResult r = brute_rank_approx(make_op(t, p, q), n);
        return py::make_tuple(r.value, r.witness);
      },
      py::arg("matrix"), py::arg("n"), py::arg("p") = "2", py::arg("q") = "2",
      "Reference value and rank n-1 witness from the brute-force oracle.");

  m.def(
      "injection_gap_study",
      [](const std::vector<int>& d_list, int n) {
        py::list out;
        for (const InjectionRow& r : injection_gap_study(d_list, n).rows) {
          py::dict d;
          d["d"] = r.d;
          d["forward"] = value_dict(r.forward);
          d["adjoint"] = value_dict(r.adjoint);
          d["gap"] = r.gap;
          out.append(d);
        }
        return out;
      },
      py::arg("d_list"), py::arg("n") = 2);

  m.def(
      "shift_decompose",
      [](const std::vector<double>& x, int m_, const std::string& form, double value) {
        const ShiftDecomposition s = shift_decompose(x, weights(form, value), m_);
        py::dict d;
        d["a_set"] = s.a_set;
        d["y"] = s.y;
        d["z"] = s.z;
        d["residual"] = s.residual;
        d["y_sup"] = s.y_sup;
        d["z_l1"] = s.z_l1;
        d["radius"] = s.radius();
        d["certified"] = s.certified();
        return d;
      },
      py::arg("x"), py::arg("m"), py::arg("weights") = "constant", py::arg("value") = 1.0);

  m.def(
      "run_spec",
      [](const std::string& text, const std::string& base_dir) {
        const ExperimentSpec spec = parse_spec(text, "<string>", base_dir);
        py::list out;
        for (const Table& t : run_computations(spec)) {
          py::list rows;
          for (const auto& row : t.rows) {
            py::dict r;
            for (size_t i = 0; i < t.columns.size(); ++i) r[py::str(t.columns[i])] = cell(row[i]);
            rows.append(r);
          }
          py::dict d;
          d["name"] = t.name;
          d["kind"] = t.kind;
          d["columns"] = t.columns;
          d["rows"] = rows;
          d["csv"] = to_csv(t);
          out.append(d);
        }
        return out;
      },
      py::arg("text"), py::arg("base_dir") = ".", "Parse a JSON experiment spec and run every computation.");
}
