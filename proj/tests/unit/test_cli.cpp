#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bratteli/parallel.hpp"
#include "runner.hpp"

using namespace bratteli;
using namespace bratteli::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bratteli");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bratteli_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Config, ParsesKeyValueText) {
  const auto config = parse_config_text("experiment = \"census\"\nM = \"const:2\"\ndepths = 10,20\nseed = 4\n");
  EXPECT_EQ(config.experiment, "census");
  EXPECT_EQ(config.values.at("M"), "const:2");
  EXPECT_EQ(config.values.at("depths"), "10,20");
  EXPECT_EQ(parse_config_text(format_config(config)).values, config.values);
}

TEST(Config, RejectsUnknownKeysAndMissingSeed) {
  EXPECT_THROW(resolve(ExperimentConfig{"census", {{"seed", "1"}, {"colour", "red"}}}), ConfigError);
  EXPECT_THROW(resolve(ExperimentConfig{"census", {{"M", "const:2"}}}), ConfigError);
  EXPECT_THROW(resolve(ExperimentConfig{"teleport", {{"seed", "1"}}}), ConfigError);
  EXPECT_THROW(resolve(ExperimentConfig{"census", {{"seed", "-3"}}}), ConfigError);
}

TEST(Config, HashTracksResolvedValues) {
  const auto a = resolve(ExperimentConfig{"census", {{"seed", "1"}}});
  const auto b = resolve(ExperimentConfig{"census", {{"seed", "2"}}});
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a), config_hash(resolve(ExperimentConfig{"census", {{"seed", "1"}}})));
}

TEST(Recipes, RegistryLookups) {
  EXPECT_EQ(recipe("dichotomy-divergent").values.at("M"), "const:2");
  EXPECT_EQ(recipe("dichotomy-convergent").values.at("M"), "poly:(n+2)^2");
  EXPECT_EQ(recipe("bing-extremal").values.at("extremal"), "true");
  EXPECT_THROW(recipe("nonexistent"), ConfigError);
  for (const auto& name : recipe_names()) EXPECT_NO_THROW(resolve(recipe(name))) << name;
}

TEST(Run, WfSimWritesLevelsWithExpectedQ) {
  const auto dir = scratch("wf");
  ASSERT_EQ(run_cli({"run", "wf-sim", "--M", "const:2", "--depth", "20", "--trials", "2000", "--seed", "7", "--out",
                     dir.string()}),
            0);
  const auto levels = slurp(dir / "levels.csv");
  EXPECT_EQ(levels.substr(0, levels.find('\n')),
            "level,meanY,seY,meanQ,seQ,expectedQ,expectedQ_exact,mean_sq_increment,mean_predicted_variance");
  EXPECT_TRUE(fs::exists(dir / "results.csv"));
  EXPECT_TRUE(fs::exists(dir / "events.jsonl"));
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["seed"], 7);
  EXPECT_EQ(summary["config"]["M"], "const:2");
  EXPECT_EQ(summary["config_hash"].get<std::string>().size(), 16u);
}

TEST(Run, LemmaOraclePasses) {
  const auto dir = scratch("lemma");
  ASSERT_EQ(run_cli({"run", "lemma-oracle", "--n", "4", "--random-instances", "100", "--seed", "1", "--out", dir.string()}),
            0);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_TRUE(summary["results"]["all_pass"].get<bool>());
  EXPECT_EQ(summary["results"]["instances"], 100);
}

TEST(Run, MissingSeedWritesNothing) {
  const auto dir = scratch("noseed");
  EXPECT_EQ(run_cli({"run", "census", "--M", "const:2", "--out", dir.string()}), 2);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Run, ConfigFileAndErrors) {
  const auto dir = scratch("file");
  fs::create_directories(dir);
  std::ofstream(dir / "run.toml") << "experiment = \"census\"\nM = \"const:2\"\ndepths = \"5,10\"\ntrials = 20\nseed = 3\n";
  EXPECT_EQ(run_cli({"run", "--config", (dir / "run.toml").string(), "--out", (dir / "out").string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "results.csv"));
  std::ofstream(dir / "bad.toml") << "experiment = \"census\"\nseed = 3\nwidth = 4\n";
  EXPECT_EQ(run_cli({"run", "--config", (dir / "bad.toml").string(), "--out", (dir / "bad").string()}), 2);
  EXPECT_EQ(run_cli({"recipe", "nonexistent"}), 2);
  EXPECT_EQ(run_cli({"run", "census", "--M", "const:2", "--depths", "5", "--seed", "1", "--bogus", "1"}), 2);
}

TEST(Run, CapRefusalExitsThree) {
  const auto dir = scratch("cap");
  EXPECT_EQ(run_cli({"run", "exact-oracle", "--M", "list:1,4,4,4,4", "--Np", "4", "--seed", "1", "--out", dir.string()}),
            3);
}

TEST(Run, DeterministicAcrossWorkerCounts) {
  const auto one = scratch("det1");
  const auto many = scratch("det8");
  const int saved = worker_count();
  set_worker_count(1);
  ASSERT_EQ(run_cli({"run", "--recipe", "dichotomy-divergent", "--trials", "300", "--out", one.string()}), 0);
  set_worker_count(8);
  ASSERT_EQ(run_cli({"run", "--recipe", "dichotomy-divergent", "--trials", "300", "--out", many.string()}), 0);
  set_worker_count(saved);
  EXPECT_EQ(slurp(one / "results.csv"), slurp(many / "results.csv"));
}
