#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "snum/cli.hpp"
#include "snum/fixtures.hpp"

using namespace snum;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("snum_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

ErrorCode parse_code(const std::string& text, std::string* msg = nullptr) {
  try {
    parse_spec(text);
  } catch (const Error& e) {
    if (msg) *msg = e.what();
    return e.code();
  }
  FAIL("spec accepted: " << text);
  return ErrorCode::invalid_argument;
}

const char* kProfile = R"({
  "spec_version": 1,
  "seed": 5,
  "operators": [{"name": "D", "type": "diagonal", "sequence": [3, 2, 1], "space": {"p": "2", "dim": 3}}],
  "computations": [{"kind": "profile", "label": "prof", "operator": "D", "s_kind": "a", "n_max": 3}],
  "output": {"format": ["csv", "json", "plotdata"]}
})";

}  // namespace

TEST_CASE("profile of diag(3,2,1) on l2") {
  const ExperimentSpec spec = parse_spec(kProfile);
  const std::vector<Table> tables = run_computations(spec);
  REQUIRE(tables.size() == 1);
  const Table& t = tables[0];
  CHECK(t.name == "prof");
  REQUIRE(t.rows.size() == 3);
  const auto col = [&](const std::string& c) {
    return static_cast<size_t>(std::find(t.columns.begin(), t.columns.end(), c) - t.columns.begin());
  };
  const double expect[] = {3, 2, 1};
  for (size_t i = 0; i < 3; ++i) {
    CHECK(std::get<long long>(t.rows[i][col("n")]) == static_cast<long long>(i + 1));
    CHECK(std::get<double>(t.rows[i][col("upper")]) == doctest::Approx(expect[i]).epsilon(1e-12));
    CHECK(std::get<double>(t.rows[i][col("lower")]) == doctest::Approx(expect[i]).epsilon(1e-12));
  }
  const std::string csv = to_csv(t);
  CHECK(csv.rfind("operator,d,kind,n,lower,upper,method,lower_method\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  const std::string plot = to_plotdata(t);
  CHECK(plot.rfind("# prof", 0) == 0);
  CHECK(plot.find("# n upper\n") != std::string::npos);
  CHECK(plot.find("\n1 3\n2 2\n3 1\n") != std::string::npos);
}

TEST_CASE("run writes outputs and a manifest") {
  const fs::path dir = scratch("run");
  dump(dir / "spec.json", kProfile);
  std::ostringstream out, err;
  REQUIRE(cmd_run((dir / "spec.json").string(), (dir / "out").string(), std::nullopt, out, err) == 0);
  for (const char* f : {"prof.csv", "prof.json", "prof.dat", "manifest.json"}) CHECK(fs::exists(dir / "out" / f));
  const std::string manifest = slurp(dir / "out" / "manifest.json");
  CHECK(manifest.find("\"spec_version\"") != std::string::npos);
  CHECK(manifest.find("\"seed\"") != std::string::npos);
  CHECK(manifest.find("prof.csv") != std::string::npos);

  REQUIRE(cmd_run((dir / "spec.json").string(), (dir / "again").string(), std::nullopt, out, err) == 0);
  CHECK(slurp(dir / "out" / "prof.csv") == slurp(dir / "again" / "prof.csv"));
  CHECK(slurp(dir / "out" / "prof.dat") == slurp(dir / "again" / "prof.dat"));
  fs::remove_all(dir);
}

TEST_CASE("same seed gives byte-identical csv for randomized computations") {
  const std::string spec = R"({
    "spec_version": 1, "seed": 17,
    "operators": [{"name": "R", "type": "diagonal",
                   "sequence": {"form": "random_bounded", "lo": 0.5, "hi": 2, "seed": 3},
                   "space": {"p": "inf", "dims": [3, 4]}}],
    "computations": [{"kind": "c", "operator": "R", "n": [1, 2]},
                     {"kind": "axioms", "s_kind": "a", "instances": 3, "max_dim": 3, "p": "1", "q": "inf"}]
  })";
  const fs::path dir = scratch("seed");
  dump(dir / "spec.json", spec);
  std::ostringstream out, err;
  REQUIRE(cmd_run((dir / "spec.json").string(), (dir / "a").string(), std::nullopt, out, err) == 0);
  REQUIRE(cmd_run((dir / "spec.json").string(), (dir / "b").string(), std::nullopt, out, err) == 0);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    if (e.path().extension() != ".csv") continue;
    CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
    ++compared;
  }
  CHECK(compared == 2);
  fs::remove_all(dir);
}

TEST_CASE("validation errors") {
  std::string msg;
  CHECK(parse_code(R"({"spec_version": 1, "operators": [], "computations": []})", &msg) ==
        ErrorCode::validation_error);
  CHECK(msg.find("computations") != std::string::npos);

  CHECK(parse_code(R"({"operators": [], "computations": [{"kind": "axioms"}]})", &msg) ==
        ErrorCode::validation_error);
  CHECK(msg.find("spec_version") != std::string::npos);

  CHECK(parse_code(R"({"spec_version": 2, "computations": [{"kind": "axioms"}]})") == ErrorCode::validation_error);

  CHECK(parse_code(R"({"spec_version": 1, "computations": [{"kind": "axioms", "bogus": 1}]})", &msg) ==
        ErrorCode::validation_error);
  CHECK(msg.find("computations[0].bogus") != std::string::npos);

  CHECK(parse_code(R"({"spec_version": 1, "extra": 0, "computations": [{"kind": "axioms"}]})", &msg) ==
        ErrorCode::validation_error);
  CHECK(msg.find("extra") != std::string::npos);

  CHECK(parse_code(R"({"spec_version": 1, "computations": [{"kind": "a", "operator": "X", "n": 1}]})") ==
        ErrorCode::validation_error);

  const char* bad_n = R"({"spec_version": 1,
    "operators": [{"name": "D", "type": "diagonal", "sequence": [1, 2], "space": {"p": "2", "dim": 2}}],
    "computations": [{"kind": "a", "operator": "D", "n": 9}]})";
  CHECK(parse_code(bad_n, &msg) == ErrorCode::validation_error);
  CHECK(msg.find("computations[0].n") != std::string::npos);
}

TEST_CASE("parse errors report line and column") {
  std::string msg;
  CHECK(parse_code("{\n  \"spec_version\": 1,\n  \"seed\": ,\n}", &msg) == ErrorCode::parse_error);
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("column") != std::string::npos);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");
  dump(dir / "empty.json", R"({"spec_version": 1, "computations": []})");
  dump(dir / "broken.json", "{");
  dump(dir / "ok.json", kProfile);
  std::ostringstream out, err;
  CHECK(cmd_run((dir / "empty.json").string(), (dir / "o").string(), std::nullopt, out, err) == 2);
  CHECK(cmd_validate((dir / "broken.json").string(), out, err) == 2);
  CHECK(cmd_validate((dir / "missing.json").string(), out, err) == 2);
  CHECK(cmd_validate((dir / "ok.json").string(), out, err) == 0);
  fs::remove_all(dir);
}

TEST_CASE("injection study through the runner matches the fixtures") {
  const ExperimentSpec spec = parse_spec(R"({"spec_version": 1,
    "computations": [{"kind": "injection_study", "d": {"from": 2, "to": 6}, "n": 2}]})");
  const std::vector<Table> tables = run_computations(spec);
  REQUIRE(tables.size() == 1);
  const Table& t = tables[0];
  REQUIRE(t.rows.size() == 5);
  const auto col = [&](const std::string& c) {
    return static_cast<size_t>(std::find(t.columns.begin(), t.columns.end(), c) - t.columns.begin());
  };
  const std::vector<FixtureRecord> fx = load_fixtures(SNUM_FIXTURE_DIR);
  for (const auto& row : t.rows) {
    const long long d = std::get<long long>(row[col("d")]);
    const FixtureRecord& f = find_fixture(fx, "injection_d" + std::to_string(d) + "_forward");
    const FixtureRecord& g = find_fixture(fx, "injection_d" + std::to_string(d) + "_adjoint");
    CHECK(std::get<double>(row[col("upper")]) == f.value);
    CHECK(std::get<double>(row[col("adjoint_upper")]) == g.value);
    CHECK(std::get<std::string>(row[col("forward_hash")]) == f.transcript_hash());
    CHECK(std::get<std::string>(row[col("adjoint_hash")]) == g.transcript_hash());
  }
}

TEST_CASE("fixture regeneration") {
  const fs::path dir = scratch("regen");
  for (const auto& e : fs::directory_iterator(SNUM_FIXTURE_DIR)) fs::copy(e.path(), dir / e.path().filename());
  const std::string before = slurp(dir / "injection.json");

  const RegenReport none = regen_fixtures(dir.string(), "no_such_fixture*");
  CHECK(none.touched() == 0);
  CHECK(none.files.empty());

  const RegenReport rep = regen_fixtures(dir.string(), "injection*");
  CHECK(rep.error.empty());
  CHECK(rep.touched() == 10);
  for (const FixtureDiff& d : rep.diffs) {
    CHECK_FALSE(d.added);
    CHECK_FALSE(d.changed);
  }
  CHECK(slurp(dir / "injection.json") == before);

  std::ostringstream out, err;
  CHECK(cmd_regen(dir.string(), "oracle_norm*", out, err) == 0);
  CHECK(out.str().find("1 fixture(s) touched, 0 changed") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("glob matching") {
  CHECK(glob_match("injection*", "injection_d2_forward"));
  CHECK(glob_match("*_n2", "oracle_i2_l1_linf_n2"));
  CHECK_FALSE(glob_match("tau_*", "gamma_shift_d2_n1"));
}
