#pragma once

#include <string>
#include <vector>

#include "snum/spaces.hpp"

namespace snum {

/// A frozen oracle value with the operator it was computed for.
struct FixtureRecord {
  std::string id;
  std::string group;
  Matrix matrix;
  NormExp domain = NormExp::two;
  NormExp codomain = NormExp::two;
  int n = 1;
  std::string kind;  // a, d, c, tau, norm
  double value = 0.0;
  double lower = 0.0;
  std::string transcript;

  std::string transcript_hash() const;
  LinearOperator op() const { return LinearOperator(matrix, domain, codomain); }
};

/// Every registered fixture id, in file order.
std::vector<std::string> fixture_ids();
std::string fixture_group(const std::string& id);

/// Recomputes one fixture from scratch with the frozen budgets.
FixtureRecord compute_fixture(const std::string& id);

std::vector<FixtureRecord> load_fixture_file(const std::string& path);
void save_fixture_file(const std::string& path, const std::string& group, const std::vector<FixtureRecord>& records);
/// All records under dir (one <group>.json per group).
std::vector<FixtureRecord> load_fixtures(const std::string& dir);
const FixtureRecord& find_fixture(const std::vector<FixtureRecord>& records, const std::string& id);

struct FixtureDiff {
  std::string id;
  bool added = false;
  bool changed = false;
  double old_value = 0.0;
  double new_value = 0.0;
  std::string old_hash;
  std::string new_hash;
};

struct RegenReport {
  std::vector<FixtureDiff> diffs;  // one entry per regenerated fixture
  std::vector<std::string> files;  // files rewritten
  std::string error;               // set when a recomputation failed; later fixtures are skipped
  int touched() const { return static_cast<int>(diffs.size()); }
};

/// Recomputes the fixtures whose id matches the glob and rewrites their files.
/// A solver error stops the run; files of groups finished before it are kept.
RegenReport regen_fixtures(const std::string& dir, const std::string& filter = "*");

bool glob_match(const std::string& pattern, const std::string& text);

}  // namespace snum
