#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "udcsim/calibration.hpp"
#include "udcsim/engine/events.hpp"
#include "udcsim/engine/metrics.hpp"
#include "udcsim/engine/scenario.hpp"
#include "udcsim/error.hpp"

namespace en = udc::engine;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(UDCSIM_SOURCE_DIR) / "scenarios";

std::string csv(const en::RunResult& r) {
  std::ostringstream out;
  r.metrics.write_csv(out);
  r.events.write_csv(out);
  r.summary.write(out);
  return out.str();
}

}  // namespace

TEST(EventQueue, OrdersByTimeThenPriorityThenInsertion) {
  en::EventQueue q;
  std::vector<std::string> seen;
  auto note = [&seen](std::string s) { return [&seen, s] { seen.push_back(s); }; };
  q.schedule(1.0, en::EventKind::kSampleTick, note("sample@1"));
  q.schedule(1.0, en::EventKind::kVm, note("vm@1"));
  q.schedule(1.0, en::EventKind::kRaid, note("raid@1"));
  q.schedule(1.0, en::EventKind::kDiskState, note("disk@1"));
  q.schedule(1.0, en::EventKind::kExcitationChange, note("excitation@1"));
  q.schedule(0.5, en::EventKind::kSampleTick, note("sample@0.5"));
  q.run_until(10.0);
  EXPECT_EQ(seen, (std::vector<std::string>{"sample@0.5", "excitation@1", "disk@1", "vm@1", "raid@1",
                                            "sample@1"}));
  EXPECT_DOUBLE_EQ(q.now(), 1.0);
}

TEST(EventQueue, ActionsMayScheduleFollowUps) {
  en::EventQueue q;
  int ticks = 0;
  std::function<void()> tick = [&] {
    ++ticks;
    q.schedule(q.now() + 1.0, en::EventKind::kSampleTick, tick);
  };
  q.schedule(0.0, en::EventKind::kSampleTick, tick);
  q.run_until(9.0);
  EXPECT_EQ(ticks, 10);
  EXPECT_FALSE(q.empty());
  EXPECT_THROW(q.schedule(1.0, en::EventKind::kNode, [] {}), udc::ValidationError);
}

TEST(EventQueue, SharedPriorityGroup) {
  EXPECT_EQ(en::priority(en::EventKind::kRaid), en::priority(en::EventKind::kNode));
  EXPECT_EQ(en::priority(en::EventKind::kNode), en::priority(en::EventKind::kVm));
  EXPECT_LT(en::priority(en::EventKind::kDiskState), en::priority(en::EventKind::kRaid));
  EXPECT_LT(en::priority(en::EventKind::kVm), en::priority(en::EventKind::kSampleTick));
}

TEST(Metrics, AppendOnlyAndCsv) {
  en::MetricsLog m;
  m.record(0.0, "throughput", 100.0, "node=uw");
  m.record(1.0, "throughput", -0.0000001, "node=uw");
  EXPECT_THROW(m.record(0.5, "throughput", 1.0), udc::Error);
  std::ostringstream out;
  m.write_csv(out);
  EXPECT_EQ(out.str(),
            "time,metric,value,tags\n"
            "0.000000,throughput,100.000000,node=uw\n"
            "1.000000,throughput,0.000000,node=uw\n");
}

TEST(Metrics, NumberFormat) {
  EXPECT_EQ(en::format_number(1.5), "1.500000");
  EXPECT_EQ(en::format_number(-0.0), "0.000000");
  EXPECT_EQ(en::format_number(1.0 / 3.0), "0.333333");
  EXPECT_EQ(en::format_number(-2.25), "-2.250000");
}

TEST(Summary, InsertionOrder) {
  en::Summary s;
  s.set("b", 2.0);
  s.set("a", "x");
  s.set("c", 3LL);
  std::ostringstream out;
  s.write(out);
  EXPECT_EQ(out.str(), "b=2.000000\na=x\nc=3\n");
  ASSERT_NE(s.find("a"), nullptr);
  EXPECT_EQ(*s.find("a"), "x");
  EXPECT_EQ(s.find("zz"), nullptr);
}

TEST(Scenario, ReportsEveryProblem) {
  const std::string text = R"({
    "horizon_s": -5,
    "bogus": 1,
    "environment": "mars",
    "source": {"delta_spl": "loud"},
    "topology": {"nodes": [{"id": "a", "storage": {"type": "raid5", "disks": [{"name": "d1"}]}}]}
  })";
  try {
    en::parse_scenario(text, {}, "test.json");
    FAIL() << "accepted an invalid scenario";
  } catch (const udc::ConfigErrors& e) {
    EXPECT_GE(e.problems().size(), 3u);
    bool unknown = false, type = false;
    for (const auto& p : e.problems()) {
      EXPECT_EQ(p.rfind("test.json: ", 0), 0u) << p;
      unknown |= p.find("bogus") != std::string::npos;
      type |= p.find("delta_spl") != std::string::npos;
    }
    EXPECT_TRUE(unknown);
    EXPECT_TRUE(type);
  }
}

TEST(Scenario, StructuralValidation) {
  auto cfg = en::load_scenario(kScenarios / "benign.json");
  const auto cal = udc::default_calibration();
  EXPECT_TRUE(cfg.problems(cal).empty());
  cfg.nodes.push_back(cfg.nodes.front());
  cfg.source.position = 9;
  cfg.source.amplitude_spl = 150.0;
  const auto p = cfg.problems(cal);
  EXPECT_EQ(p.size(), 3u);
  EXPECT_THROW(cfg.validate(cal), udc::ConfigErrors);
  EXPECT_THROW(en::parse_scenario("{not json"), udc::ConfigError);
}

TEST(Engine, HdfsCascadeEventSequence) {
  const auto cfg = en::load_scenario(kScenarios / "hdfs_cascade.json");
  const auto r = en::run(cfg, udc::default_calibration());
  std::vector<std::string> seq;
  double first_drop = -1.0, failed = -1.0, removed = -1.0;
  for (const auto& e : r.events.events()) {
    if (e.subject == "uw" && e.kind == en::EventKind::kNode) seq.push_back("node:" + e.what);
    if (e.kind == en::EventKind::kRaid && e.what == "dropped" && e.subject.rfind("uw/", 0) == 0) {
      seq.push_back("drop");
      if (first_drop < 0) first_drop = e.time;
    }
    if (e.subject == "uw/array" && e.what == "failed") failed = e.time;
    if (e.subject == "uw" && e.what == "removed") removed = e.time;
  }
  EXPECT_EQ(seq, (std::vector<std::string>{"node:blocked", "drop", "node:live", "node:blocked", "drop",
                                           "node:removed"}));
  EXPECT_LT(first_drop, 300.0);
  EXPECT_GE(removed, failed);
  EXPECT_GE(failed, 0.0);
  EXPECT_EQ(*r.summary.find("node.land1.status"), "live");
  EXPECT_EQ(*r.summary.find("replicas.added"), "32");
}

TEST(Engine, BenignScenarioIsQuiet) {
  const auto cfg = en::load_scenario(kScenarios / "benign.json");
  const auto r = en::run(cfg, udc::default_calibration());
  for (const auto& e : r.events.events()) EXPECT_EQ(e.kind, en::EventKind::kExcitationChange) << e.what;
  EXPECT_EQ(*r.summary.find("node.uw.status"), "live");
}

TEST(Engine, SameSeedSameBytes) {
  for (const char* name : {"hdfs_cascade.json", "vm_migration.json"}) {
    const auto cfg = en::load_scenario(kScenarios / name);
    const auto cal = udc::default_calibration();
    EXPECT_EQ(csv(en::run(cfg, cal)), csv(en::run(cfg, cal))) << name;
  }
}

TEST(Engine, SeedChangesJitteredRuns) {
  auto cfg = en::load_scenario(kScenarios / "vm_migration.json");
  const auto cal = udc::default_calibration();
  const auto a = csv(en::run(cfg, cal));
  cfg.seed += 1;
  EXPECT_NE(a, csv(en::run(cfg, cal)));
}

TEST(Engine, InvalidScenarioRefusesToRun) {
  auto cfg = en::load_scenario(kScenarios / "benign.json");
  cfg.horizon_s = 0.0;
  EXPECT_THROW(en::run(cfg, udc::default_calibration()), udc::ConfigErrors);
}
