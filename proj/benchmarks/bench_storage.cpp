#include <benchmark/benchmark.h>

#include "udcsim/calibration.hpp"
#include "udcsim/engine/rng.hpp"
#include "udcsim/storage.hpp"
#include "udcsim/workload.hpp"

namespace st = udc::storage;
namespace wl = udc::workload;

namespace {

st::DiskModel lab_hdd() {
  st::DiskModel m;
  m.write_curve = udc::default_calibration().lab.write_curve;
  return m;
}

void BM_Raid5Step(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<st::DiskState> states(n);
  st::Raid5Array array(n);
  for (auto _ : state) benchmark::DoNotOptimize(array.step(states, 1.0));
}
BENCHMARK(BM_Raid5Step)->Arg(4)->Arg(8);

void BM_TargetStepUnderAttack(benchmark::State& state) {
  auto target = wl::StorageTarget::raid5(std::vector<st::DiskModel>(4, lab_hdd()));
  udc::acoustics::EffectiveExcitation e;
  e.delta_spl = 30.0;
  for (auto _ : state) benchmark::DoNotOptimize(target.step(e, 1.0, udc::WorkloadKind::kSequentialWrite));
}
BENCHMARK(BM_TargetStepUnderAttack);

void BM_ReplayWebTrace(benchmark::State& state) {
  udc::engine::RngStream rng(7);
  const auto pristine = wl::StorageTarget::raid5(std::vector<st::DiskModel>(4, lab_hdd()));
  const auto requests = wl::synthesize_trace(wl::msr_profile("web"), pristine.baseline_throughput(), rng);
  const auto feed = wl::constant_excitation(state.range(0));
  for (auto _ : state) {
    auto target = pristine;
    benchmark::DoNotOptimize(wl::replay_trace(requests, target, feed, 1e6));
  }
}
BENCHMARK(BM_ReplayWebTrace)->Arg(0)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace
