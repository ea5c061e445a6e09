#include "snum/fixtures.hpp"

#include <fnmatch.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include <json.hpp>

#include "snum/bounds.hpp"
#include "snum/hash.hpp"
#include "snum/oracle.hpp"
#include "snum/rng.hpp"
#include "snum/schemes.hpp"
#include "snum/snumbers.hpp"

namespace snum {
namespace {

using json = nlohmann::ordered_json;

struct Entry {
  std::string id;
  std::string group;
  std::function<FixtureRecord()> make;
};

FixtureRecord base(const std::string& id, const std::string& group, const LinearOperator& t, int n,
                   const std::string& kind) {
  FixtureRecord r;
  r.id = id;
  r.group = group;
  r.matrix = t.matrix();
  r.domain = t.domain().p();
  r.codomain = t.codomain().p();
  r.n = n;
  r.kind = kind;
  return r;
}

Matrix diag321() {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 3.0;
  d(1, 1) = 2.0;
  d(2, 2) = 1.0;
  return d;
}

Matrix random3() { return Rng::stream(11, 0).normal_matrix(3, 3); }

// tau_n(T) = a_n(M) with M = S_{Y*}^T T S_X on l1 -> linf.
LinearOperator tau_surrogate(const LinearOperator& t) {
  const Matrix sx = extreme_point_matrix(t.domain());
  const Matrix sy = extreme_point_matrix(t.codomain().dual());
  const Matrix m = sy.transpose() * t.matrix() * sx;
  return LinearOperator(m, NormedSpace(static_cast<int>(m.cols()), NormExp::one),
                        NormedSpace(static_cast<int>(m.rows()), NormExp::inf));
}

FixtureRecord brute_record(FixtureRecord r, const LinearOperator& target) {
  const OracleResult o = brute_rank_approx(target, r.n);
  r.value = o.value;
  r.lower = std::min(o.value, s_number_lower(target, r.n).value);
  r.transcript = o.transcript;
  return r;
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    for (int d = 2; d <= 6; ++d) {
      for (bool adj : {false, true}) {
        const std::string id = "injection_d" + std::to_string(d) + (adj ? "_adjoint" : "_forward");
        e.push_back({id, "injection", [id, d, adj] {
                       const InjectionStudy st = injection_gap_study({d}, 2);
                       const InjectionRow& row = st.rows.front();
                       const LinearOperator id_op = canonical_injection(d);
                       FixtureRecord r = base(id, "injection", adj ? adjoint(id_op) : id_op, 2, "a");
                       const SNumberValue& v = adj ? row.adjoint : row.forward;
                       r.value = v.upper;
                       r.lower = v.lower;
                       r.transcript = adj ? row.adjoint_transcript : row.forward_transcript;
                       return r;
                     }});
      }
    }
    e.push_back({"oracle_i2_l1_linf_n2", "oracle", [] {
                   const LinearOperator t = canonical_injection(2);
                   return brute_record(base("oracle_i2_l1_linf_n2", "oracle", t, 2, "a"), t);
                 }});
    e.push_back({"oracle_diag321_l2_n2", "oracle", [] {
                   const LinearOperator t(diag321(), NormExp::two, NormExp::two);
                   return brute_record(base("oracle_diag321_l2_n2", "oracle", t, 2, "a"), t);
                 }});
    e.push_back({"oracle_norm_1234_l1_l1", "oracle", [] {
                   Matrix m(2, 2);
                   m << 1, 2, 3, 4;
                   const LinearOperator t(m, NormExp::one, NormExp::one);
                   FixtureRecord r = base("oracle_norm_1234_l1_l1", "oracle", t, 1, "norm");
                   const OracleResult o = vertex_norm_oracle(t);
                   r.value = r.lower = o.value;
                   r.transcript = o.transcript;
                   return r;
                 }});
    struct TauCase {
      std::string name;
      Matrix m;
      NormExp p, q;
    };
    for (const TauCase& c : {TauCase{"diag321_l1_linf", diag321(), NormExp::one, NormExp::inf},
                             TauCase{"rand3_linf_l1", random3(), NormExp::inf, NormExp::one}}) {
      for (bool adj : {false, true}) {
        for (int n = 1; n <= 3; ++n) {
          const std::string id = "tau_" + c.name + (adj ? "_adj" : "") + "_n" + std::to_string(n);
          e.push_back({id, "tau", [id, c, adj, n] {
                         const LinearOperator t0(c.m, c.p, c.q);
                         const LinearOperator t = adj ? adjoint(t0) : t0;
                         return brute_record(base(id, "tau", t, n, "tau"), tau_surrogate(t));
                       }});
        }
      }
    }
    for (int d = 2; d <= 6; ++d) {
      for (int n = 1; n <= 3; ++n) {
        const std::string id = "gamma_shift_d" + std::to_string(d) + "_n" + std::to_string(n);
        e.push_back({id, "gamma", [id, d, n] {
                       const LinearOperator t =
                           ModelOperator::weighted_shift(SequenceGenerator::constant(1.0)).truncate(d);
                       FixtureRecord r = base(id, "gamma", t, n, "d");
                       const SNumberValue v = kolmogorov_number(t, n);
                       r.value = v.upper;
                       r.lower = v.lower;
                       r.transcript = "kolmogorov n=" + std::to_string(n) + " lower=" + format_double(v.lower) +
                                      " upper=" + format_double(v.upper) + " method=" + to_string(v.method) +
                                      " lower_method=" + v.lower_method;
                       return r;
                     }});
      }
    }
    return e;
  }();
  return entries;
}

const Entry& entry(const std::string& id) {
  for (const Entry& e : registry())
    if (e.id == id) return e;
  throw Error(ErrorCode::invalid_argument, "unknown fixture '" + id + "'");
}

json to_json(const FixtureRecord& r) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < r.matrix.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < r.matrix.cols(); ++j) row.push_back(r.matrix(i, j));
    rows.push_back(row);
  }
  json o;
  o["id"] = r.id;
  o["operator"] = {{"matrix", rows}, {"domain", to_string(r.domain)}, {"codomain", to_string(r.codomain)}};
  o["n"] = r.n;
  o["kind"] = r.kind;
  o["value"] = r.value;
  o["lower"] = r.lower;
  o["transcript"] = r.transcript;
  o["transcript_hash"] = r.transcript_hash();
  return o;
}

FixtureRecord from_json(const json& o, const std::string& group) {
  FixtureRecord r;
  r.id = o.at("id").get<std::string>();
  r.group = group;
  const json& op = o.at("operator");
  const json& rows = op.at("matrix");
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = m ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
  r.matrix.resize(m, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < d; ++j) r.matrix(i, j) = rows.at(static_cast<size_t>(i)).at(static_cast<size_t>(j)).get<double>();
  r.domain = parse_norm_exp(op.at("domain").get<std::string>());
  r.codomain = parse_norm_exp(op.at("codomain").get<std::string>());
  r.n = o.at("n").get<int>();
  r.kind = o.at("kind").get<std::string>();
  r.value = o.at("value").get<double>();
  r.lower = o.at("lower").get<double>();
  r.transcript = o.at("transcript").get<std::string>();
  if (o.at("transcript_hash").get<std::string>() != r.transcript_hash())
    throw Error(ErrorCode::validation_error, "fixture " + r.id + ": transcript hash mismatch");
  return r;
}

}  // namespace

std::string FixtureRecord::transcript_hash() const { return hex64(fnv1a64(transcript)); }

bool glob_match(const std::string& pattern, const std::string& text) {
  return fnmatch(pattern.c_str(), text.c_str(), 0) == 0;
}

std::vector<std::string> fixture_ids() {
  std::vector<std::string> ids;
  for (const Entry& e : registry()) ids.push_back(e.id);
  return ids;
}

std::string fixture_group(const std::string& id) { return entry(id).group; }

FixtureRecord compute_fixture(const std::string& id) { return entry(id).make(); }

std::vector<FixtureRecord> load_fixture_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open fixture file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::parse_error, path + ": " + ex.what());
  }
  const std::string group = doc.at("group").get<std::string>();
  std::vector<FixtureRecord> out;
  for (const json& o : doc.at("records")) out.push_back(from_json(o, group));
  return out;
}

void save_fixture_file(const std::string& path, const std::string& group, const std::vector<FixtureRecord>& records) {
  json doc;
  doc["group"] = group;
  doc["records"] = json::array();
  for (const FixtureRecord& r : records) doc["records"].push_back(to_json(r));
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write fixture file " + path);
  out << doc.dump(2) << '\n';
}

std::vector<FixtureRecord> load_fixtures(const std::string& dir) {
  std::vector<std::string> groups;
  for (const Entry& e : registry())
    if (std::find(groups.begin(), groups.end(), e.group) == groups.end()) groups.push_back(e.group);
  std::vector<FixtureRecord> out;
  for (const std::string& g : groups) {
    const std::string path = dir + "/" + g + ".json";
    if (!std::filesystem::exists(path)) continue;
    for (FixtureRecord& r : load_fixture_file(path)) out.push_back(std::move(r));
  }
  return out;
}

const FixtureRecord& find_fixture(const std::vector<FixtureRecord>& records, const std::string& id) {
  for (const FixtureRecord& r : records)
    if (r.id == id) return r;
  throw Error(ErrorCode::invalid_argument, "fixture '" + id + "' is not in the fixture files");
}

RegenReport regen_fixtures(const std::string& dir, const std::string& filter) {
  RegenReport rep;
  std::map<std::string, std::vector<const Entry*>> by_group;
  std::vector<std::string> order;
  for (const Entry& e : registry()) {
    if (!glob_match(filter, e.id)) continue;
    if (!by_group.count(e.group)) order.push_back(e.group);
    by_group[e.group].push_back(&e);
  }
  for (const std::string& g : order) {
    const std::string path = dir + "/" + g + ".json";
    std::vector<FixtureRecord> old;
    if (std::filesystem::exists(path)) old = load_fixture_file(path);
    std::map<std::string, FixtureRecord> fresh;
    for (const Entry* e : by_group[g]) {
      FixtureRecord r;
      try {
        r = e->make();
      } catch (const Error& ex) {
        rep.error = e->id + ": " + ex.what();
        return rep;
      }
      FixtureDiff d;
      d.id = r.id;
      d.new_value = r.value;
      d.new_hash = r.transcript_hash();
      auto it = std::find_if(old.begin(), old.end(), [&](const FixtureRecord& o) { return o.id == r.id; });
      if (it == old.end()) {
        d.added = true;
      } else {
        d.old_value = it->value;
        d.old_hash = it->transcript_hash();
        d.changed = it->value != r.value || d.old_hash != d.new_hash || it->lower != r.lower;
      }
      rep.diffs.push_back(d);
      fresh[r.id] = std::move(r);
    }
    // Registry order; untouched records are kept as they were.
    std::vector<FixtureRecord> out;
    for (const Entry& e : registry()) {
      if (e.group != g) continue;
      if (fresh.count(e.id)) {
        out.push_back(fresh[e.id]);
        continue;
      }
      auto it = std::find_if(old.begin(), old.end(), [&](const FixtureRecord& o) { return o.id == e.id; });
      if (it != old.end()) out.push_back(*it);
    }
    std::filesystem::create_directories(dir);
    save_fixture_file(path, g, out);
    rep.files.push_back(path);
  }
  return rep;
}

}  // namespace snum
