#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "udcsim/calibration.hpp"
#include "udcsim/detector.hpp"
#include "udcsim/engine/scenario.hpp"
#include "udcsim/workload.hpp"

// Experiment recipes behind the udcsim subcommands. Each recipe has a
// parameter struct whose defaults are the shipped experiment, a pure
// function computing its rows, and a writer used by the CLI.
namespace udc::cli {

namespace fs = std::filesystem;

struct Options {
  std::optional<fs::path> scenario;
  fs::path out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> calibration;
  std::optional<int> trials;
  bool quiet = false;
  std::optional<fs::path> profiles;  // detect-eval: read this store instead of profiling
};

// Disks of the array under test in the benchmark recipes.
struct ArraySpec {
  std::vector<double> offsets_db{0.0, 0.0, 0.0, 0.0};
  std::vector<std::optional<double>> thresholds_db;  // per disk, unset: calibrated + jitter
  std::optional<double> dwell_s;
};

workload::StorageTarget make_array(const Calibration& cal, Environment env, const ArraySpec& spec,
                                   std::uint64_t seed, const std::string& label);

// ---- sweep

struct SweepParams {
  Environment environment = Environment::kLab;
  double delta_spl = 34.0;
  double start_hz = 100.0;
  double stop_hz = 12000.0;
  double step_hz = 100.0;
  int trials = 3;
  double duration_s = 5.0;
  double flag_decrease = 0.2;  // flagged when the mean decrease is strictly larger
  ArraySpec array;
  std::uint64_t seed = 1;
};

struct SweepPoint {
  double frequency_hz = 0.0;
  double normalized = 0.0;
  bool flagged = false;
};

bool is_flagged(double normalized_throughput, double flag_decrease);
std::vector<SweepPoint> frequency_sweep(const SweepParams& p, const Calibration& cal);

// ---- volume-curve, positions, angle

struct VolumeParams {
  Environment environment = Environment::kLab;
  std::vector<double> levels_db{26.0, 28.0, 30.0, 32.0};
  double frequency_hz = 5100.0;
  int trials = 3;
  double duration_s = 30.0;
  WorkloadKind workload = WorkloadKind::kSequentialWrite;
  ArraySpec array;
  std::uint64_t seed = 1;
};

struct VolumePoint {
  double delta_spl = 0.0;
  double mean_mb_s = 0.0;
  double normalized = 0.0;
  double stddev_mb_s = 0.0;  // across trial means
  double pes_ratio = 0.0;
};

std::vector<VolumePoint> volume_curve(const VolumeParams& p, const Calibration& cal);

struct PositionParams {
  double delta_spl = 30.0;
  double frequency_hz = 5100.0;
  std::vector<int> locations{1, 2, 3, 4};
  int trials = 3;
  double duration_s = 30.0;
  ArraySpec array;
  std::uint64_t seed = 1;
};

struct PositionPoint {
  int location = 1;
  double factor = 1.0;
  double normalized = 0.0;
};

std::vector<PositionPoint> position_study(const PositionParams& p, const Calibration& cal);

struct AngleParams {
  double delta_spl = 30.0;
  double frequency_hz = 5100.0;
  std::vector<double> angles_deg{0.0, 45.0, 90.0};
  int trials = 3;
  double duration_s = 30.0;
  ArraySpec array;
  std::uint64_t seed = 1;
};

struct AnglePoint {
  double angle_deg = 0.0;
  double factor = 1.0;
  double normalized = 0.0;
  double relative_effectiveness = 0.0;  // throughput loss vs the 0 deg loss
};

std::vector<AnglePoint> angle_study(const AngleParams& p, const Calibration& cal);

// ---- db-latency

struct DbParams {
  std::vector<int> underwater_nodes{3, 5, 7};
  double start_db = 0.0;
  double stop_db = 40.0;
  double step_db = 2.0;
};

struct DbPoint {
  int underwater_nodes = 0;
  double delta_spl = 0.0;
  std::optional<double> normalized_latency;
};

std::vector<DbPoint> db_latency_sweep(const DbParams& p, const Calibration& cal);

// ---- fem-attenuation

struct FemParams {
  double base_displacement_nm = 145.5;
  double alpha_np_per_km = 0.1;
  std::vector<double> distances_m{0, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
};

struct FemPoint {
  double distance_m = 0.0;
  double displacement_nm = 0.0;
};

std::vector<FemPoint> fem_attenuation(const FemParams& p);

// ---- cache-bench

struct CacheParams {
  std::vector<double> sizes_gb{0.5, 1.0, 1.5, 2.0};
  std::vector<WorkloadKind> workloads{WorkloadKind::kSequentialWrite, WorkloadKind::kSequentialRead,
                                      WorkloadKind::kRandomWrite, WorkloadKind::kRandomRead};
  std::size_t hit_draws = 100000;
  std::size_t latency_samples = 10000;
  std::uint64_t seed = 1;
};

struct HitRatioRow {
  WorkloadKind workload{};
  double cache_gb = 0.0;
  std::size_t draws = 0;
  std::size_t hits = 0;
  double configured = 0.0;

  double measured() const { return draws ? static_cast<double>(hits) / static_cast<double>(draws) : 0.0; }
};

HitRatioRow cache_hit_ratio(const Calibration& cal, WorkloadKind kind, double cache_gb,
                            std::size_t draws, std::uint64_t seed);
std::vector<double> cache_latency_samples(const Calibration& cal, WorkloadKind kind, double cache_gb,
                                          bool attacked, std::size_t n, std::uint64_t seed);

// ---- snia-replay

struct SniaParams {
  std::vector<std::string> traces{"mds", "prxy", "web"};
  std::vector<double> levels_db{26.0, 28.0, 30.0, 32.0, 34.0, 36.0, 38.0, 40.0};
  double frequency_hz = 5100.0;
  int trials = 3;
  std::size_t requests = 50000;
  double time_compression = 1.0;  // issue spans divided by this factor
  double tick_s = 1.0;
  ArraySpec array{{0.0, 3.0, 3.0, 3.0}, {31.0, std::nullopt, std::nullopt, std::nullopt}, std::nullopt};
  // Directory with <name>.csv MSR traces; synthetic traces when unset.
  std::optional<fs::path> trace_dir;
  std::uint64_t seed = 1;
};

struct SniaPoint {
  std::string trace;
  double delta_spl = 0.0;
  int trial = 0;
  std::size_t requests = 0;
  std::size_t issued = 0;
  std::size_t fulfilled = 0;
  bool failed = false;
  std::optional<double> failed_at_s;

  // Share of the whole trace fulfilled within the budget.
  double fraction() const { return requests ? static_cast<double>(fulfilled) / static_cast<double>(requests) : 0.0; }
};

std::vector<SniaPoint> snia_replay(const SniaParams& p, const Calibration& cal);

// ---- detector

struct DetectParams {
  int disks = 4;
  int profile_traces = 100;
  int pool_traces = 100;
  std::vector<double> levels_db{26.0, 28.0, 30.0};
  std::size_t combinations = 1000;
  double duration_s = 30.0;
  double frequency_hz = 5100.0;
  std::uint64_t seed = 1;
};

std::vector<detector::DiskProfile> build_profiles(const DetectParams& p, const Calibration& cal);
detector::Pools build_pools(const DetectParams& p, const Calibration& cal, double level_db);

struct DetectPoint {
  double delta_spl = 0.0;
  detector::Evaluation evaluation;
};

std::vector<DetectPoint> detect_eval(const DetectParams& p, const Calibration& cal,
                                     const std::vector<detector::DiskProfile>& profiles);

// ---- engine scenarios

engine::ScenarioConfig default_hdfs_scenario();
engine::ScenarioConfig default_vm_scenario();

struct VmTrial {
  std::uint64_t seed = 0;
  long long baseline_underwater = 0;
  long long attacked_underwater = 0;
  long long unfinished_underwater = 0;
  long long blocked_underwater = 0;

  double reduction() const;
};

// Attack run against the same scenario with a silent source.
VmTrial vm_migration_trial(const engine::ScenarioConfig& config, const Calibration& cal,
                           std::uint64_t seed, const std::string& underwater_host = "uw");

// ---- CLI

// Runs one subcommand. Returns the process exit status.
int run_subcommand(const std::string& name, const Options& opts);
const std::vector<std::string>& subcommand_names();

}  // namespace udc::cli
