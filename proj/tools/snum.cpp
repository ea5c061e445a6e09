#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "snum/cli.hpp"

#ifndef SNUM_FIXTURE_DIR
#define SNUM_FIXTURE_DIR "fixtures"
#endif

int main(int argc, char** argv) {
  CLI::App app{"snum: s-numbers of operators between finite-dimensional l_p spaces"};
  app.set_version_flag("--version", snum::kVersion);
  app.require_subcommand(1);

  std::string spec_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run an experiment spec");
  run->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output.path)");
  run->add_option("--seed", seed, "Seed (overrides the spec)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse and validate a spec without running it");
  validate->add_option("spec", validate_path, "Experiment spec (JSON)")->required();

  std::string filter = "*";
  std::string dir = SNUM_FIXTURE_DIR;
  auto* fixtures = app.add_subcommand("fixtures", "Manage oracle fixtures");
  fixtures->require_subcommand(1);
  auto* regen = fixtures->add_subcommand("regen", "Recompute fixtures and rewrite their files");
  regen->add_option("--filter", filter, "Glob over fixture ids");
  regen->add_option("--dir", dir, "Fixture directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*run) return snum::cmd_run(spec_path, out_dir, seed, std::cout, std::cerr);
  if (*validate) return snum::cmd_validate(validate_path, std::cout, std::cerr);
  if (*regen) return snum::cmd_regen(dir, filter, std::cout, std::cerr);
  return 2;
}
