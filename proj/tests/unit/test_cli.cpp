#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "plots.hpp"
#include "recipes.hpp"
#include "udcsim/error.hpp"

namespace cli = udc::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(UDCSIM_SOURCE_DIR) / "scenarios";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("udcsim_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int shell(const std::string& args) {
  const std::string cmd = std::string(UDCSIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

cli::Options quiet_out(const fs::path& dir) {
  cli::Options o;
  o.out = dir;
  o.quiet = true;
  return o;
}

}  // namespace

TEST(Recipes, FemAttenuationAtOneKilometre) {
  const auto pts = cli::fem_attenuation({});
  ASSERT_EQ(pts.size(), 11u);
  EXPECT_DOUBLE_EQ(pts.front().displacement_nm, 145.5);
  EXPECT_NEAR(pts.back().displacement_nm, 145.5 * std::exp(-0.1), 1e-9);
}

TEST(Recipes, DbSweepGoesOutOfService) {
  const auto pts = cli::db_latency_sweep({}, udc::default_calibration());
  EXPECT_EQ(pts.size(), 3u * 21u);
  for (const auto& p : pts) {
    if (p.delta_spl > 38.0) {
      EXPECT_FALSE(p.normalized_latency.has_value());
    } else {
      ASSERT_TRUE(p.normalized_latency.has_value());
      EXPECT_GE(*p.normalized_latency, 1.0);
    }
  }
}

TEST(Recipes, VolumeCurveEndpoints) {
  cli::VolumeParams p;
  p.levels_db = {26.0, 32.0};
  p.trials = 1;
  const auto pts = cli::volume_curve(p, udc::default_calibration());
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].normalized, 0.83, 0.05);
  EXPECT_LE(pts[1].normalized, 0.02);
}

TEST(Recipes, FlagRuleIsStrict) {
  EXPECT_TRUE(cli::is_flagged(0.79, 0.2));
  EXPECT_FALSE(cli::is_flagged(0.8, 0.2));
  EXPECT_FALSE(cli::is_flagged(1.0, 0.2));
}

TEST(Recipes, CacheHitRatioMatchesTable) {
  const auto cal = udc::default_calibration();
  const auto row = cli::cache_hit_ratio(cal, udc::WorkloadKind::kSequentialWrite, 0.5, 100000, 1);
  EXPECT_EQ(row.draws, 100000u);
  EXPECT_NEAR(row.measured(), 0.333, 0.01);
  const auto lat = cli::cache_latency_samples(cal, udc::WorkloadKind::kRandomWrite, 1.0, true, 1000, 1);
  ASSERT_EQ(lat.size(), 1000u);
  for (double v : lat) {
    EXPECT_GE(v, 200.0);
    EXPECT_LE(v, 800.0);
  }
}

TEST(Recipes, VmTrialReduction) {
  cli::VmTrial t;
  t.baseline_underwater = 25;
  t.attacked_underwater = 9;
  EXPECT_NEAR(t.reduction(), 0.64, 1e-12);
}

TEST(Plots, MissingColumnIsReported) {
  const auto dir = scratch("plots");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "a.csv");
    f << "# comment\nx,y\n1,2\n";
  }
  EXPECT_EQ(cli::csv_columns(dir / "a.csv"), (std::vector<std::string>{"x", "y"}));
  cli::PlotSpec ok{"t", "x", "y", "x", {{"y", "y", {}}}, {}};
  EXPECT_NO_THROW(cli::emit_plot(dir / "a.csv", dir / "a.gp", ok));
  const auto script = slurp(dir / "a.gp");
  EXPECT_NE(script.find("using 1:2"), std::string::npos);
  cli::PlotSpec bad{"t", "x", "y", "x", {{"z", "z", {}}}, {}};
  try {
    cli::emit_plot(dir / "a.csv", dir / "b.gp", bad);
    FAIL();
  } catch (const udc::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'z'"), std::string::npos);
  }
  cli::PlotSpec bad_filter{"t", "x", "y", "x", {{"y", "y", {{"trace", "mds"}}}}, {}};
  EXPECT_THROW(cli::emit_plot(dir / "a.csv", dir / "c.gp", bad_filter), udc::ValidationError);
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("exit");
  auto o = quiet_out(dir);
  EXPECT_EQ(cli::run_subcommand("fem-attenuation", o), 0);
  EXPECT_TRUE(fs::exists(dir / "fem_attenuation.csv"));
  EXPECT_TRUE(fs::exists(dir / "fem_attenuation.gp"));
  EXPECT_TRUE(fs::exists(dir / "summary.txt"));
  EXPECT_EQ(cli::run_subcommand("no-such-command", o), 1);
  EXPECT_EQ(cli::run_subcommand("run", o), 1);
  o.scenario = dir / "missing.json";
  EXPECT_EQ(cli::run_subcommand("run", o), 2);
  o.scenario = kScenarios / "sweep.json";
  EXPECT_EQ(cli::run_subcommand("fem-attenuation", o), 2);  // recipe mismatch
  o.scenario.reset();
  o.calibration = dir / "missing_calibration.json";
  EXPECT_EQ(cli::run_subcommand("fem-attenuation", o), 2);
  fs::remove_all(dir);
}

TEST(Cli, BinaryExitCodes) {
  const auto dir = scratch("binary");
  EXPECT_EQ(shell("--version"), 0);
  EXPECT_EQ(shell(""), 1);
  EXPECT_EQ(shell("--bogus"), 1);
  EXPECT_EQ(shell("fem-attenuation --trials 0"), 1);
  EXPECT_EQ(shell("fem-attenuation --quiet --out " + dir.string()), 0);
  EXPECT_EQ(shell("run --quiet --out " + dir.string() + " --scenario " + (dir / "nope.json").string()), 2);
  fs::remove_all(dir);
}

TEST(Cli, EveryShippedParameterFileIsAccepted) {
  // Only the parameter check runs here; each recipe is exercised at full
  // size by the acceptance binary.
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    const auto text = slurp(entry.path());
    if (text.find("\"recipe\"") == std::string::npos) continue;
    const auto start = text.find('"', text.find(':', text.find("\"recipe\"")) + 1);
    const auto recipe = text.substr(start + 1, text.find('"', start + 1) - start - 1);
    if (recipe != "fem-attenuation" && recipe != "db-latency" && recipe != "angle" && recipe != "positions") {
      continue;
    }
    const auto dir = scratch("params");
    auto o = quiet_out(dir);
    o.scenario = entry.path();
    o.trials = 1;
    EXPECT_EQ(cli::run_subcommand(recipe, o), 0) << entry.path();
    fs::remove_all(dir);
  }
}

TEST(Cli, RunIsByteIdentical) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  auto oa = quiet_out(a);
  auto ob = quiet_out(b);
  oa.scenario = ob.scenario = kScenarios / "hdfs_cascade.json";
  ASSERT_EQ(cli::run_subcommand("run", oa), 0);
  ASSERT_EQ(cli::run_subcommand("run", ob), 0);
  for (const char* f : {"metrics.csv", "events.csv", "summary.txt", "timeline.gp"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}
