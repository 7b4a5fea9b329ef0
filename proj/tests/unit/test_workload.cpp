#include <sstream>

#include <gtest/gtest.h>

#include "udcsim/calibration.hpp"
#include "udcsim/error.hpp"
#include "udcsim/workload.hpp"

namespace wl = udc::workload;
namespace st = udc::storage;

namespace {

st::DiskModel lab_disk() {
  st::DiskModel m;
  m.write_curve = udc::default_calibration().lab.write_curve;
  return m;
}

wl::StorageTarget lab_array() {
  return wl::StorageTarget::raid5({lab_disk(), lab_disk(), lab_disk(), lab_disk()});
}

constexpr const char* kMsr =
    "128166372003061629,web,0,Read,3154152960,32768,1593\n"
    "128166372003061630,web,0,Write,3154185728,4096,2000\n"
    "128166372013061629,web,1,Read,3154152960,65536,1593\n";

}  // namespace

TEST(MsrTrace, ParsesTicksRelativeToFirstRequest) {
  std::istringstream in(kMsr);
  const auto r = wl::parse_msr_trace(in);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_DOUBLE_EQ(r[0].timestamp_s, 0.0);
  EXPECT_NEAR(r[1].timestamp_s, 1e-7, 1e-12);
  EXPECT_NEAR(r[2].timestamp_s, 1.0, 1e-9);
  EXPECT_EQ(r[1].operation, wl::IoOp::kWrite);
  EXPECT_EQ(r[2].size, 65536u);
  EXPECT_EQ(r[0].offset, 3154152960u);
}

TEST(MsrTrace, MaxRequestsTruncates) {
  std::istringstream in(kMsr);
  EXPECT_EQ(wl::parse_msr_trace(in, 2).size(), 2u);
}

TEST(MsrTrace, ErrorsNameTheLine) {
  const struct {
    const char* text;
    std::size_t line;
  } cases[] = {
      {"128166372003061629,web,0,Read,1,2\n", 1},
      {"128166372003061629,web,0,Read,1,2,3\nabc,web,0,Read,1,2,3\n", 2},
      {"128166372003061629,web,0,Read,1,2,3\n\n128166372003061629,web,0,Erase,1,2,3\n", 3},
      {"128166372003061629,web,0,Read,1,2,3\n128166372003061628,web,0,Read,1,2,3\n", 2},
      {"128166372003061629,web,0,Read,-1,2,3\n", 1},
  };
  for (const auto& c : cases) {
    std::istringstream in(c.text);
    try {
      wl::parse_msr_trace(in);
      ADD_FAILURE() << "accepted: " << c.text;
    } catch (const udc::ParseError& e) {
      EXPECT_EQ(e.line(), c.line) << c.text;
    }
  }
}

TEST(MsrTrace, EmptyFileWarns) {
  std::istringstream in("");
  std::vector<std::string> warnings;
  EXPECT_TRUE(wl::parse_msr_trace(in, 50000, &warnings).empty());
  ASSERT_EQ(warnings.size(), 1u);
}

TEST(MsrTrace, WriteReadRoundTrip) {
  auto rng = udc::engine::derive_rng(4, "test/msr");
  const auto reqs = wl::synthesize_trace({"x", 500, 60.0, 0.4}, 50.0, rng);
  std::stringstream buf;
  wl::write_msr_trace(buf, reqs, "x");
  const auto back = wl::parse_msr_trace(buf);
  ASSERT_EQ(back.size(), reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    EXPECT_NEAR(back[i].timestamp_s, reqs[i].timestamp_s, 1e-7);
    EXPECT_EQ(back[i].operation, reqs[i].operation);
    EXPECT_EQ(back[i].size, reqs[i].size);
    EXPECT_EQ(back[i].offset, reqs[i].offset);
  }
}

TEST(ThroughputTrace, CsvRoundTrip) {
  wl::ThroughputTrace t;
  t.sample_period_s = 0.5;
  t.labels["disk"] = "hdd1";
  t.labels["workload"] = "sequential-write";
  t.samples = {{0.0, 100.0}, {0.5, 83.25}, {1.0, 0.0}};
  std::stringstream buf;
  t.write_csv(buf);
  const auto back = wl::ThroughputTrace::read_csv(buf);
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_DOUBLE_EQ(back.sample_period_s, 0.5);
  EXPECT_FALSE(back.aborted);
  ASSERT_EQ(back.samples.size(), 3u);
  EXPECT_DOUBLE_EQ(back.samples[1].mb_s, 83.25);
  std::stringstream again;
  back.write_csv(again);
  std::stringstream first;
  t.write_csv(first);
  EXPECT_EQ(again.str(), first.str());
}

TEST(ThroughputTrace, RejectsMalformed) {
  for (const char* text : {"", "t_s,throughput_mb_s\n1,2,3\n", "t_s,throughput_mb_s\n1,-2\n",
                           "t_s,throughput_mb_s\n2,1\n1,1\n", "# novalue\nt_s,throughput_mb_s\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(wl::ThroughputTrace::read_csv(in), udc::ParseError) << text;
  }
}

TEST(Benchmark, NoiselessTraceFollowsTheCurve) {
  auto disk = wl::StorageTarget::single_disk(lab_disk());
  auto rng = udc::engine::derive_rng(1, "test/bench");
  wl::WorkloadSpec spec;
  spec.duration_s = 30.0;
  const auto trace = wl::run_benchmark(spec, disk, wl::constant_excitation(26.0), {0.0}, rng);
  ASSERT_EQ(trace.samples.size(), 30u);
  EXPECT_NEAR(trace.mean(), 83.0, 1e-9);
  EXPECT_EQ(trace.labels.at("workload"), "sequential-write");
}

TEST(Benchmark, SameSeedSameTrace) {
  auto run = [](std::uint64_t seed) {
    auto a = lab_array();
    auto rng = udc::engine::derive_rng(seed, "test/bench");
    return wl::run_benchmark({}, a, wl::constant_excitation(28.0), {0.03}, rng).values();
  };
  EXPECT_EQ(run(9), run(9));
  EXPECT_NE(run(9), run(10));
}

TEST(Benchmark, AbortsWhenTheArrayFails) {
  auto a = wl::StorageTarget::raid5({lab_disk(), lab_disk(), lab_disk(), lab_disk()}, {5.0, 5.0});
  auto rng = udc::engine::derive_rng(1, "test/bench");
  wl::WorkloadSpec spec;
  spec.duration_s = 600.0;
  const auto trace = wl::run_benchmark(spec, a, wl::constant_excitation(40.0), {0.0}, rng);
  EXPECT_TRUE(trace.aborted);
  EXPECT_LT(trace.samples.size(), 600u);
  EXPECT_THROW(wl::run_benchmark(spec, a, wl::constant_excitation(0.0), {0.0}, rng),
               udc::UnavailableError);
}

TEST(Replay, HandBuiltTraceWithoutAttack) {
  auto disk = wl::StorageTarget::single_disk(lab_disk());  // 100 MB/s
  std::vector<wl::TraceRequest> reqs{{0.0, wl::IoOp::kWrite, 0, 50'000'000},
                                     {0.2, wl::IoOp::kRead, 0, 50'000'000},
                                     {2.0, wl::IoOp::kWrite, 0, 100'000'000}};
  const auto r = wl::replay_trace(reqs, disk, wl::constant_excitation(0.0, 0.0), 100.0);
  EXPECT_EQ(r.fulfilled, 3u);
  EXPECT_EQ(r.issued, 3u);
  EXPECT_FALSE(r.storage_failed);
  EXPECT_NEAR(r.elapsed_s, 3.0, 1e-9);
}

TEST(Replay, WallLimitCutsTheTrace) {
  auto disk = wl::StorageTarget::single_disk(lab_disk());
  std::vector<wl::TraceRequest> reqs{{0.0, wl::IoOp::kWrite, 0, 150'000'000},
                                     {0.0, wl::IoOp::kWrite, 0, 150'000'000}};
  const auto r = wl::replay_trace(reqs, disk, wl::constant_excitation(0.0, 0.0), 2.0);
  EXPECT_EQ(r.fulfilled, 1u);
  EXPECT_EQ(r.issued, 2u);
  EXPECT_DOUBLE_EQ(r.elapsed_s, 2.0);
}

TEST(Replay, BaselineBudgetFinishesSyntheticTrace) {
  const auto pristine = lab_array();
  auto rng = udc::engine::derive_rng(2, "test/replay");
  const auto reqs = wl::synthesize_trace(wl::msr_profile("prxy"), 100.0, rng);
  const double budget = wl::baseline_wall_budget(reqs, pristine);
  auto target = pristine;
  const auto r = wl::replay_trace(reqs, target, wl::constant_excitation(0.0, 0.0), budget);
  EXPECT_EQ(r.fulfilled, reqs.size());
  auto attacked = pristine;
  const auto slow = wl::replay_trace(reqs, attacked, wl::constant_excitation(28.0), budget);
  EXPECT_LT(slow.fulfilled, reqs.size());
}

TEST(Replay, RejectsUnsortedRequests) {
  auto disk = wl::StorageTarget::single_disk(lab_disk());
  std::vector<wl::TraceRequest> reqs{{1.0, wl::IoOp::kRead, 0, 1}, {0.0, wl::IoOp::kRead, 0, 1}};
  EXPECT_THROW(wl::replay_trace(reqs, disk, wl::constant_excitation(0.0), 5.0), udc::ValidationError);
}

TEST(SyntheticTrace, DemandMatchesServiceRate) {
  auto rng = udc::engine::derive_rng(3, "test/synth");
  const auto p = wl::msr_profile("web");
  const auto reqs = wl::synthesize_trace(p, 100.0, rng);
  ASSERT_EQ(reqs.size(), p.requests);
  double bytes = 0.0;
  std::size_t writes = 0;
  for (const auto& r : reqs) {
    bytes += static_cast<double>(r.size);
    writes += r.operation == wl::IoOp::kWrite;
  }
  EXPECT_NEAR(bytes / (100.0e6 * p.span_s), 1.0, 0.01);
  EXPECT_NEAR(static_cast<double>(writes) / reqs.size(), p.write_fraction, 0.01);
  EXPECT_THROW(wl::msr_profile("nope"), udc::ConfigError);
}

TEST(WorkloadKind, Parsing) {
  EXPECT_EQ(udc::parse_workload_kind("SW"), udc::WorkloadKind::kSequentialWrite);
  EXPECT_EQ(udc::parse_workload_kind("random-read"), udc::WorkloadKind::kRandomRead);
  EXPECT_FALSE(udc::parse_workload_kind("seq").has_value());
}
