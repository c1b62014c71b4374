#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cabfeyn/cabfeyn.hpp"
#include "cabfeyn/config.hpp"
#include "cabfeyn/harness.hpp"

using namespace cabfeyn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cabfeyn_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_drifted() {
  return parse_config(R"({
    "scale": {"preset": "drifted", "grid_n": 256},
    "h": "b",
    "functional": {"name": "F4"},
    "psi": {"preset": "gaussian"},
    "lambda": [1.0, 2.0, {"re": 1.0, "im": -0.5}],
    "q": 1.0, "delta": 1.0,
    "n_paths": 2000, "path_steps": 64, "seed": 3,
    "converge_terms": 4,
    "xi_grid": {"min": -1, "max": 1, "count": 4}
  })");
}

std::string config_error_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(exit_code(e.kind()), exit_codes::config_error);
    return e.what();
  }
  ADD_FAILURE() << "no error for " << text;
  return {};
}

}  // namespace

TEST(Config, DefaultsAndRoundTrip) {
  const RunConfig a = small_drifted();
  EXPECT_EQ(a.scale.grid_n, 256);
  EXPECT_EQ(a.lambda.size(), 3u);
  EXPECT_EQ(a.lambda[2], cplx(1.0, -0.5));
  EXPECT_DOUBLE_EQ(a.q0, 0.5);
  const RunConfig b = config_from_json(to_json(a));
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(Config, UnknownKeysNamePath) {
  EXPECT_NE(config_error_message(R"({"scale": {"alfa": 0.3}})").find("scale.alfa"), std::string::npos);
  EXPECT_NE(config_error_message(R"({"lamda": [1]})").find("lamda"), std::string::npos);
  EXPECT_NE(config_error_message(R"({"xi_grid": {"cnt": 3}})").find("xi_grid.cnt"), std::string::npos);
}

TEST(Config, BadTypesAndValues) {
  EXPECT_NE(config_error_message(R"({"q0": "half"})").find("q0"), std::string::npos);
  EXPECT_NE(config_error_message(R"({"q0": -1})").find("q0"), std::string::npos);
  EXPECT_NE(config_error_message(R"({"scale": {"preset": "levy"}})").find("scale.preset"), std::string::npos);
  EXPECT_NE(config_error_message(R"({"functional": {"name": "F9"}})").find("functional.name"), std::string::npos);
  EXPECT_NE(config_error_message(R"({"lambda": [0]})").find("lambda"), std::string::npos);
  EXPECT_NE(config_error_message("{not json").find("ConfigError"), std::string::npos);
}

TEST(Config, MissingFile) {
  try {
    load_config("/nonexistent/cabfeyn.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code(e.kind()), exit_codes::config_error);
  }
}

TEST(Harness, SelftestOnWiener) {
  RunConfig c = parse_config(R"({"scale": {"preset": "wiener"}, "psi": {"preset": "standard_gaussian"}})");
  const auto dir = scratch("selftest");
  EXPECT_EQ(harness::run(c, "selftest", {dir.string(), true}), exit_codes::ok);
  const auto t = harness::read_csv(dir / "selftest.csv");
  EXPECT_EQ(t.rows.size(), 24u);
  EXPECT_TRUE(fs::exists(dir / "selftest_manifest.json"));
}

TEST(Harness, BelowQ0IsAdmissibilityError) {
  RunConfig c = small_drifted();
  c.q = 0.25;
  c.n_paths = 0;
  const auto dir = scratch("below_q0");
  EXPECT_EQ(harness::run(c, "evaluate", {dir.string(), true}), exit_codes::admissibility_error);
  const auto m = json::parse(slurp(dir / "evaluate_manifest.json"));
  EXPECT_EQ(m["status"], "error");
  EXPECT_NE(m["error"].get<std::string>().find("admissibility"), std::string::npos);
}

TEST(Harness, EvaluateIsReproducibleAndSized) {
  const RunConfig c = small_drifted();
  const auto d1 = scratch("eval1"), d2 = scratch("eval2");
  ASSERT_EQ(harness::run(c, "evaluate", {d1.string(), true}), exit_codes::ok);
  ASSERT_EQ(harness::run(c, "evaluate", {d2.string(), true}), exit_codes::ok);
  for (const char* f : {"evaluate_kernel_0.csv", "evaluate_mc_0.csv", "evaluate_mc_1.csv", "evaluate_kernel_2.csv",
                        "evaluate_kernel_q.csv"}) {
    ASSERT_TRUE(fs::exists(d1 / f)) << f;
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
    EXPECT_EQ(harness::read_csv(d1 / f).rows.size(), 4u) << f;
  }
  EXPECT_FALSE(fs::exists(d1 / "evaluate_mc_2.csv"));
  EXPECT_EQ(slurp(d1 / "evaluate_kernel_0.csv").find('\r'), std::string::npos);
  // Collation of the oracle comparison.
  EXPECT_EQ(harness::run(c, "report", {d1.string(), true}), exit_codes::ok);
  const auto rep = harness::read_csv(d1 / "report.csv");
  EXPECT_EQ(rep.rows.size(), 2u);
}

TEST(Harness, ConvergeRowsMatchTerms) {
  const RunConfig c = small_drifted();
  const auto dir = scratch("converge");
  ASSERT_EQ(harness::run(c, "converge", {dir.string(), true}), exit_codes::ok);
  EXPECT_EQ(harness::read_csv(dir / "converge.csv").rows.size(), 4u);
  EXPECT_EQ(harness::read_csv(dir / "converge_limit.csv").rows.size(), 4u);
}

TEST(Harness, CounterexampleIncreasing) {
  RunConfig c = parse_config(R"({"h": "a_unit", "psi": {"preset": "counterexample"}, "q": -1.0})");
  const auto dir = scratch("counterexample");
  ASSERT_EQ(harness::run(c, "counterexample", {dir.string(), true}), exit_codes::ok);
  const auto t = harness::read_csv(dir / "counterexample.csv");
  ASSERT_EQ(t.rows.size(), 4u);
  const auto col = t.col("partial");
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_GT(std::stod(t.rows[i][col]), std::stod(t.rows[i - 1][col]));
}

TEST(Harness, CounterexampleOnWienerIsConfigError) {
  RunConfig c = parse_config(R"({"scale": {"preset": "wiener"}, "psi": {"preset": "counterexample"}})");
  EXPECT_EQ(harness::run(c, "counterexample", {scratch("cx_wiener").string(), true}), exit_codes::config_error);
}

TEST(Harness, OutputDirectoryFromEnvironment) {
  const auto dir = scratch("env");
  ::setenv(harness::out_env, dir.string().c_str(), 1);
  RunConfig c = parse_config(R"({"scale": {"preset": "wiener", "grid_n": 64}})");
  EXPECT_EQ(harness::resolve_output_dir(c, std::nullopt), dir);
  EXPECT_EQ(harness::resolve_output_dir(c, std::string("x")), fs::path("x"));
  EXPECT_EQ(harness::run(c, "validate", {std::nullopt, true}), exit_codes::ok);
  EXPECT_TRUE(fs::exists(dir / "validate.csv"));
  c.output_dir = (dir / "cfg").string();
  EXPECT_EQ(harness::resolve_output_dir(c, std::nullopt), dir / "cfg");
  ::unsetenv(harness::out_env);
  c.output_dir.reset();
  EXPECT_EQ(harness::resolve_output_dir(c, std::nullopt), fs::path(harness::default_out));
}

TEST(Harness, UnknownSubcommand) {
  EXPECT_EQ(harness::run(RunConfig{}, "frobnicate", {scratch("unk").string(), true}), exit_codes::config_error);
}
