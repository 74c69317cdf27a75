#include "clfsynth/commands.hpp"

#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "clfsynth/errors.hpp"

namespace clfsynth {
namespace {

Json Config(const std::string& name) {
  return ReadJsonFile(std::string(CLFSYNTH_CONFIG_DIR) + "/" + name);
}

// Same configuration, without file output.
Json InMemory(Json config) {
  config.erase("output");
  config["output"] = {{"trajectory_prefix", "mem_"}};
  return config;
}

TEST(CareCommandTest, DoubleIntegrator) {
  const CommandOutcome out = CareCommand(Config("care_example.json"));
  EXPECT_EQ(out.status, ExitStatus::kPass);
  const Eigen::MatrixXd P = MatrixFromJson(out.report["P"]);
  EXPECT_NEAR(P(0, 0), std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(P(0, 1), 1.0, 1e-12);
}

TEST(RunTest, ScalarLqPasses) {
  const CommandOutcome out =
      ExecuteRun(ParseRunConfig(InMemory(Config("scalar_lq_run.json")), std::nullopt));
  EXPECT_EQ(out.status, ExitStatus::kPass) << out.report.dump(2);
  EXPECT_EQ(out.report["exit_code"], 0);
  EXPECT_TRUE(out.report["failures"].empty());
  EXPECT_FALSE(out.files.empty());
}

TEST(RunTest, ReportKeyOrder) {
  const CommandOutcome out = ExecuteRun(
      ParseRunConfig(InMemory(Config("scalar_cubic_run.json")), std::nullopt));
  std::vector<std::string> keys;
  for (const auto& [key, value] : out.report.items()) keys.push_back(key);
  ASSERT_GE(keys.size(), 3u);
  EXPECT_EQ(keys.front(), "config_hash");
  EXPECT_EQ(keys[1], "seed");
  EXPECT_EQ(keys.back(), "exit_code");
}

TEST(RunTest, DeterministicBytes) {
  const Json config = InMemory(Config("strict_feedback_run.json"));
  const CommandOutcome a = ExecuteRun(ParseRunConfig(config, std::nullopt));
  const CommandOutcome b = ExecuteRun(ParseRunConfig(config, std::nullopt));
  EXPECT_EQ(a.report.dump(), b.report.dump());
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    EXPECT_EQ(a.files[i], b.files[i]);
  }
}

TEST(RunTest, SeedOverrideChangesHash) {
  const Json config = InMemory(Config("scalar_cubic_run.json"));
  const RunConfig base = ParseRunConfig(config, std::nullopt);
  const RunConfig other = ParseRunConfig(config, base.problem.seed + 1);
  EXPECT_NE(base.config_hash, other.config_hash);
  EXPECT_EQ(other.problem.seed, base.problem.seed + 1);
  EXPECT_EQ(ParseRunConfig(config, std::nullopt).config_hash, base.config_hash);
}

TEST(RunTest, ValidationBeforeSynthesis) {
  Json config = InMemory(Config("scalar_cubic_run.json"));
  config["system"] = "unknown_plant";
  EXPECT_THROW(ParseRunConfig(config, std::nullopt), ValidationError);
  config = InMemory(Config("scalar_cubic_run.json"));
  config["integrator"]["dt"] = -1.0;
  EXPECT_THROW(ParseRunConfig(config, std::nullopt), ValidationError);
  config = InMemory(Config("scalar_cubic_run.json"));
  config["checks"] = {"hjb"};
  EXPECT_THROW(ParseRunConfig(config, std::nullopt), ValidationError);
}

TEST(RunTest, DivergenceIsReported) {
  // A destabilizing linear law: the cubic escapes in finite time.
  Json config = InMemory(Config("scalar_cubic_run.json"));
  config["controller"]["type"] = "linear";
  config["controller"]["K_o"] = -1.0;
  config["checks"] = {"monotone"};
  config["initial_states"] = {{2.5}};
  const CommandOutcome out = ExecuteRun(ParseRunConfig(config, std::nullopt));
  EXPECT_EQ(out.status, ExitStatus::kDivergence) << out.report.dump(2);
  EXPECT_EQ(out.report["exit_code"], 4);
}

TEST(InvoptTest, BuildVerifyCostPipeline) {
  const CommandOutcome built =
      InvoptBuildCommand(Config("invopt_scalar_lq.json"), std::nullopt);
  ASSERT_EQ(built.status, ExitStatus::kPass) << built.report.dump(2);
  const CommandOutcome hjb = InvoptVerifyHjbCommand(built.report, std::nullopt);
  EXPECT_EQ(hjb.status, ExitStatus::kPass) << hjb.report.dump(2);
  const CommandOutcome cost = InvoptCostCommand(built.report, std::nullopt, "trace_");
  EXPECT_EQ(cost.status, ExitStatus::kPass) << cost.report.dump(2);
  EXPECT_FALSE(cost.files.empty());
  EXPECT_EQ(cost.files.front().second.rfind("t,x1,u1,q,integrand\n", 0), 0u);
}

TEST(BackstepTest, DemoPartition) {
  const CommandOutcome out = BackstepCommand(Config("backstep_demo.json"), std::nullopt);
  EXPECT_EQ(out.status, ExitStatus::kPass) << out.report.dump(2);
}

TEST(OrbitalCommandTest, ShortHorizon) {
  OrbitalCommandArgs args;
  args.params = Config("orbital_params.json");
  args.cost = Config("orbital_cost.json");
  args.T = 20.0;
  const CommandOutcome out = OrbitalCommand(args);
  EXPECT_EQ(out.status, ExitStatus::kPass) << out.report.dump(2);
  EXPECT_TRUE(out.report["simulation"]["monotone"].get<bool>());
}

}  // namespace
}  // namespace clfsynth
