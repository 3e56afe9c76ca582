#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "runner.hpp"

using namespace ambitlab::cli;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    Config::parse_text(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ambitlab_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ConfigParse, AcceptsCommentsAndDefaults) {
  const auto c = Config::parse_text(
      "# heading\n[run]\nexperiment = levy-check ; inline\n\n[levy]\nalpha = 1.5 # inline\n", "x");
  EXPECT_EQ(c.text("run.experiment"), "levy-check");
  EXPECT_DOUBLE_EQ(c.real("levy.alpha"), 1.5);
  EXPECT_DOUBLE_EQ(c.real("levy.c_plus"), 1.0);
  EXPECT_TRUE(c.is_auto("levy.gammas"));
}

TEST(ConfigParse, ErrorsNameTheLine) {
  EXPECT_NE(error_of("[run]\nseed = 1\n[levy]\nalfa = 1\n").find("test.cfg:4"), std::string::npos);
  EXPECT_NE(error_of("[nope]\n").find("test.cfg:1"), std::string::npos);
  EXPECT_NE(error_of("seed = 1\n").find("test.cfg:1"), std::string::npos);
  EXPECT_NE(error_of("[run]\nseed = 1\nseed = 2\n").find("test.cfg:3"), std::string::npos);
  EXPECT_NE(error_of("[levy]\nalpha = 2.5\n").find("test.cfg:2"), std::string::npos);
  EXPECT_NE(error_of("[levy]\nalpha = abc\n").find("test.cfg:2"), std::string::npos);
  EXPECT_NE(error_of("[run]\nexperiment = nothing\n").find("test.cfg:2"), std::string::npos);
}

TEST(ConfigParse, ShippedConfigsLoad) {
  for (const auto& entry : fs::directory_iterator(AMBITLAB_CONFIG_DIR)) {
    if (entry.path().extension() == ".cfg") {
      EXPECT_NO_THROW(Config::load(entry.path().string())) << entry.path();
    }
  }
  EXPECT_THROW(Config::load("/no/such/file.cfg"), ConfigError);
}

TEST(ConfigOverride, QualifiedAndBareKeys) {
  Config c;
  c.apply_override("levy.alpha=1.3");
  EXPECT_DOUBLE_EQ(c.real("levy.alpha"), 1.3);
  c.apply_override("c_minus=0.5");
  EXPECT_DOUBLE_EQ(c.real("levy.c_minus"), 0.5);
  EXPECT_THROW(c.apply_override("beta=0.5"), ConfigError);
  EXPECT_THROW(c.apply_override("levy.alfa=1"), ConfigError);
  EXPECT_THROW(c.apply_override("alpha"), ConfigError);
  EXPECT_THROW(c.apply_override("alpha=3"), ConfigError);
}

TEST(ConfigHash, IgnoresSeedWorkersAndOutdir) {
  Config a;
  Config b;
  b.apply_override("run.seed=99");
  b.apply_override("run.workers=4");
  b.apply_override("run.outdir=/tmp");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.apply_override("levy.alpha=1.1");
  EXPECT_NE(a.hash(), b.hash());
}

TEST(RunCommand, MissingOutdirFails) {
  RunRequest r;
  r.experiment = "levy-check";
  r.outdir = "/no/such/dir/for/ambitlab";
  EXPECT_EQ(run_command(r), 1);
}

TEST(RunCommand, MissingExperimentFails) {
  RunRequest r;
  r.outdir = fresh_dir("noexp").string();
  EXPECT_EQ(run_command(r), 1);
}

TEST(RunCommand, LevyCheckWritesOutputs) {
  const auto dir = fresh_dir("levy");
  RunRequest r;
  r.experiment = "levy-check";
  r.overrides = {"alpha=1"};
  r.outdir = dir.string();
  r.seed = 5;
  ASSERT_EQ(run_command(r), 0);
  const auto summary = read_json(dir / "summary.json");
  EXPECT_EQ(summary["experiment"], "levy-check");
  EXPECT_EQ(summary["status"], "ok");
  EXPECT_EQ(summary["seed"], 5);
  EXPECT_EQ(summary["violations"], 0);
  EXPECT_NEAR(summary["constants"]["c_lower"].get<double>(), 3.141592653589793, 1e-6);
  const auto csv = read_text(dir / "results.csv");
  EXPECT_EQ(csv.rfind("experiment,quantity,x,value,stderr", 0), 0u);
  const auto log = read_text(dir / "run.log");
  EXPECT_NE(log.find("status ok"), std::string::npos);
}

TEST(RunCommand, InconclusiveRunReturnsTwo) {
  const auto dir = fresh_dir("inconclusive");
  RunRequest r;
  r.config_path = std::string(AMBITLAB_CONFIG_DIR) + "/ambit-decay.cfg";
  r.overrides = {"run.n_paths=8", "ambit.time_cells=32", "ambit.space_cells=16"};
  r.outdir = dir.string();
  EXPECT_EQ(run_command(r), 2);
  EXPECT_EQ(read_json(dir / "summary.json")["status"], "inconclusive");
}

TEST(RunCommand, NumericalErrorReturnsOne) {
  const auto dir = fresh_dir("numerical");
  RunRequest r;
  r.experiment = "spde-exponents";
  r.overrides = {"noise.d=2", "spde.m=16"};
  r.outdir = dir.string();
  EXPECT_EQ(run_command(r), 1);
}
