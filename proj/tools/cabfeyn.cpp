// Command-line runner: cabfeyn <subcommand> [--config PATH] [--seed N] [--out DIR] [--quiet]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cabfeyn/config.hpp"
#include "cabfeyn/harness.hpp"

int main(int argc, char** argv) {
  using namespace cabfeyn;
  CLI::App app{"Operator-valued function space integrals on C_{a,b}[0,T]"};
  app.require_subcommand(1, 1);
  std::optional<std::string> config_path, out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  for (const auto& name : harness::subcommands()) {
    auto* sub = app.add_subcommand(name, harness::describe(name));
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "overrides the configured seed");
    sub->add_option("--out", out, std::string("output directory (default: $") + harness::out_env + ")");
    sub->add_flag("--quiet", quiet, "suppress progress messages");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_codes::config_error;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  RunConfig cfg;
  try {
    if (config_path) cfg = load_config(*config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  if (seed) cfg.seed = *seed;
  return harness::run(cfg, sub, {out, quiet});
}
