#include <benchmark/benchmark.h>

#include <cmath>

#include "recipes.hpp"
#include "udcsim/calibration.hpp"
#include "udcsim/detector.hpp"

namespace dt = udc::detector;

namespace {

dt::Curve wave(std::size_t n, double phase) {
  dt::Curve c;
  for (std::size_t i = 0; i < n; ++i) {
    c.t.push_back(static_cast<double>(i));
    c.y.push_back(100.0 + 5.0 * std::sin(0.3 * static_cast<double>(i) + phase));
  }
  return c;
}

void BM_PcmDistance(benchmark::State& state) {
  const auto a = wave(30, 0.0);
  const auto b = wave(30, 1.0);
  const dt::PcmConfig cfg{static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(dt::pcm_distance(a, b, cfg));
}
BENCHMARK(BM_PcmDistance)->Arg(64)->Arg(128)->Arg(512);

struct Fixture {
  std::vector<dt::DiskProfile> profiles;
  dt::Pools pools;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    udc::cli::DetectParams p;
    p.profile_traces = 20;
    p.pool_traces = 4;
    const auto cal = udc::default_calibration();
    return Fixture{udc::cli::build_profiles(p, cal), udc::cli::build_pools(p, cal, 28.0)};
  }();
  return f;
}

void BM_ClassifyFourDisks(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<udc::workload::ThroughputTrace> traces;
  for (const auto& pool : f.pools.attacked) traces.push_back(pool.front());
  for (auto _ : state) benchmark::DoNotOptimize(dt::classify_disks(traces, f.profiles));
}
BENCHMARK(BM_ClassifyFourDisks);

}  // namespace
