#include <benchmark/benchmark.h>

#include <filesystem>

#include "udcsim/calibration.hpp"
#include "udcsim/engine/scenario.hpp"

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(UDCSIM_SOURCE_DIR) / "scenarios";

void run_named(benchmark::State& state, const char* name) {
  const auto cfg = udc::engine::load_scenario(kScenarios / name);
  const auto cal = udc::default_calibration();
  for (auto _ : state) benchmark::DoNotOptimize(udc::engine::run(cfg, cal));
}

void BM_RunHdfsCascade(benchmark::State& state) { run_named(state, "hdfs_cascade.json"); }
void BM_RunVmMigration(benchmark::State& state) { run_named(state, "vm_migration.json"); }
void BM_RunBenign(benchmark::State& state) { run_named(state, "benign.json"); }

BENCHMARK(BM_RunHdfsCascade)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunVmMigration)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunBenign)->Unit(benchmark::kMillisecond);

}  // namespace
