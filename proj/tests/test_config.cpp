#include <gtest/gtest.h>

#include <filesystem>

#include "duellab/config.hpp"
#include "duellab/error.hpp"

using namespace duellab;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(
envs:
  - {kind: square}
agents:
  - nvldb-ucb-asym
)";

std::string error_of(const std::string& text, const std::vector<std::string>& ov = {}) {
  try {
    parse_config_text(text, ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ParseConfig, MinimalIsFullyDefaulted) {
  const auto c = parse_config_text(kMinimal);
  EXPECT_EQ(c.rounds, 2000);
  EXPECT_EQ(c.seeds.size(), 20u);
  EXPECT_EQ(c.seeds.front(), 0u);
  EXPECT_EQ(c.seeds.back(), 19u);
  EXPECT_EQ(c.parallelism, 1);
  ASSERT_EQ(c.envs.size(), 1u);
  EXPECT_EQ(c.envs[0].name, "square");
  EXPECT_EQ(c.envs[0].dim, 5);
  EXPECT_EQ(c.envs[0].arms, 5);
  ASSERT_EQ(c.agents.size(), 1u);
  const auto& a = c.agents[0].config;
  EXPECT_EQ(c.agents[0].name, "nvldb-ucb-asym");
  EXPECT_EQ(a.lambda, 1.0);
  EXPECT_EQ(a.selection.nu, 1.0);
  EXPECT_EQ(a.train.n_steps, 20);
  EXPECT_EQ(a.train.episode_len, 1);
  EXPECT_EQ(a.train.gamma, 0.01);
  EXPECT_EQ(a.width, 32);
  EXPECT_EQ(a.hidden_layers, 2);
  EXPECT_EQ(a, preset_config("nvldb-ucb-asym"));
}

TEST(ParseConfig, OverrideReplacesOnlyNu) {
  const auto base = parse_config_text(kMinimal);
  const auto c = parse_config_text(kMinimal, {"agent.nu=2.0"});
  EXPECT_EQ(c.agents[0].config.selection.nu, 2.0);
  auto expect = base;
  expect.agents[0].config.selection.nu = 2.0;
  EXPECT_EQ(c, expect);
}

TEST(ParseConfig, NegativeLambdaNamesPath) {
  const std::string err = error_of(kMinimal, {"agent.lambda=-1"});
  EXPECT_NE(err.find("agent.lambda"), std::string::npos) << err;
}

TEST(ParseConfig, ErrorsNameTheirPath) {
  EXPECT_NE(error_of("runner: {rounds: 5, bogus: 1}\nenvs: [{kind: square}]\nagents: [nvldb-ucb-asym]").find("runner.bogus"),
            std::string::npos);
  EXPECT_NE(error_of("envs: [{kind: square, dim: x}]\nagents: [nvldb-ucb-asym]").find("envs.0.dim"), std::string::npos);
  EXPECT_NE(error_of("envs: [{kind: square}]\nagents: [nope]").find("agents.0"), std::string::npos);
  EXPECT_NE(error_of("envs: [{kind: square}]\nagents: [{preset: nvldb-ucb-asym, width: 3}]").find("agents.0.width"),
            std::string::npos);
  EXPECT_NE(error_of("envs: []\nagents: [nvldb-ucb-asym]").find("envs"), std::string::npos);
  EXPECT_NE(error_of("envs: [{kind: square}]\nagents: []").find("agents"), std::string::npos);
  EXPECT_NE(error_of("zzz: 1\nenvs: [{kind: square}]\nagents: [nvldb-ucb-asym]").find("zzz"), std::string::npos);
  EXPECT_FALSE(error_of("envs: [{kind: square}\n").empty());
}

TEST(ParseConfig, ListOverridesAndIndices) {
  const auto c = parse_config_text(kMinimal, {"runner.seeds=[4, 9]", "envs.0.arms=7", "runner.parallelism=8"});
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 9}));
  EXPECT_EQ(c.envs[0].arms, 7);
  EXPECT_EQ(c.parallelism, 8);
  EXPECT_THROW(parse_config_text(kMinimal, {"envs.3.arms=7"}), ConfigError);
  EXPECT_THROW(parse_config_text(kMinimal, {"novalue"}), ConfigError);
}

TEST(ParseConfig, PerAgentKeysOverrideGlobalSection) {
  const auto c = parse_config_text(R"(
envs: [{kind: cosine}]
agent: {nu: 0.5, width: 16}
agents:
  - nvldb-ucb-asym
  - {preset: nldb-ts-csym, name: ts, nu: 3.0, gram: refresh}
)");
  EXPECT_EQ(c.agents[0].config.selection.nu, 0.5);
  EXPECT_EQ(c.agents[0].config.width, 16);
  EXPECT_EQ(c.agents[1].name, "ts");
  EXPECT_EQ(c.agents[1].config.selection.nu, 3.0);
  EXPECT_EQ(c.agents[1].config.width, 16);
  EXPECT_EQ(c.agents[1].config.gram_mode, GramMode::Refresh);
  EXPECT_EQ(c.agents[1].config.selection.strategy, Strategy::TsCsym);
}

TEST(ParseConfig, DuplicateNamesRejected) {
  EXPECT_THROW(parse_config_text("envs: [{kind: square}]\nagents: [nvldb-ucb-asym, nvldb-ucb-asym]"), ConfigError);
  EXPECT_THROW(parse_config_text("envs: [{kind: square}, {kind: square}]\nagents: [nvldb-ucb-asym]"), ConfigError);
}

TEST(SerializeConfig, FixedPoint) {
  const auto c = parse_config_text(R"(
runner: {rounds: 123, seeds: [5, 18446744073709551615], parallelism: 3, output_dir: "out dir", timing: false}
envs:
  - {name: sq, kind: square, dim: 3, arms: 6, symmetrize: true}
  - {name: t, kind: tabular, path: x.csv, label: cls, header: true, delimiter: ";", preference: margin, margin: 0.75}
agents:
  - {preset: nvldb-ucb-asym-faithful, lr: 0.0123456789012345, epsilon: 0.1}
  - linear-ucb-csym-aware
)");
  const std::string once = serialize_config(c);
  const auto back = parse_config_text(once);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), once);
}

TEST(ShippedConfigs, GoodOnesParseBadOnesFail) {
  const fs::path dir = DUELLAB_CONFIG_DIR;
  int good = 0, bad = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".yaml") continue;
    ++good;
    EXPECT_NO_THROW({
      const auto c = parse_config(e.path().string());
      EXPECT_EQ(parse_config_text(serialize_config(c)), c);
    }) << e.path();
  }
  for (const auto& e : fs::directory_iterator(dir / "bad")) {
    if (e.path().extension() != ".yaml") continue;
    ++bad;
    EXPECT_THROW(parse_config(e.path().string()), ConfigError) << e.path();
  }
  EXPECT_GE(good, 3);
  EXPECT_GE(bad, 5);
}

TEST(ParseConfig, MissingFile) { EXPECT_THROW(parse_config("/nonexistent/x.yaml"), ConfigError); }
