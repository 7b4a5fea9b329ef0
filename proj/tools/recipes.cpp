#include "recipes.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "embedded_scenarios.hpp"
#include "udcsim/error.hpp"

namespace udc::cli {

using engine::derive_rng;
using engine::derive_seed;

workload::StorageTarget make_array(const Calibration& cal, Environment env, const ArraySpec& spec,
                                   std::uint64_t seed, const std::string& label) {
  if (spec.offsets_db.size() < 3) throw ValidationError("array: RAID 5 needs at least 3 disks");
  if (!spec.thresholds_db.empty() && spec.thresholds_db.size() != spec.offsets_db.size()) {
    throw ValidationError("array: thresholds_db must match offsets_db in length");
  }
  const auto& ec = cal.environment(env);
  std::vector<storage::DiskModel> models;
  for (std::size_t i = 0; i < spec.offsets_db.size(); ++i) {
    storage::DiskModel m;
    m.name = fmt::format("hdd{}", i + 1);
    m.baseline_throughput = cal.disk.baseline_throughput;
    m.write_curve = ec.write_curve;
    m.read_curve = ec.read_curve;
    m.sensitivity_offset_db = spec.offsets_db[i];
    m.unresponsive_dwell_s = spec.dwell_s.value_or(cal.disk.unresponsive_dwell_s);
    m.permanent_damage_rate = cal.disk.permanent_damage_rate;
    if (i < spec.thresholds_db.size() && spec.thresholds_db[i]) {
      m.unresponsive_threshold_db = *spec.thresholds_db[i];
    } else {
      auto rng = derive_rng(seed, fmt::format("{}/{}/threshold", label, m.name));
      const double j = cal.disk.threshold_jitter_db;
      m.unresponsive_threshold_db = cal.disk.unresponsive_threshold_db + rng.uniform(-j, j);
    }
    models.push_back(std::move(m));
  }
  return workload::StorageTarget::raid5(std::move(models), cal.raid);
}

namespace {

// Mean over the full benchmark duration; samples missing after an abort count as zero.
double benchmark_mean(workload::StorageTarget target, double duration_s, WorkloadKind kind,
                      double delta_spl, double factor, const Calibration& cal,
                      engine::RngStream& rng) {
  workload::WorkloadSpec spec;
  spec.kind = kind;
  spec.duration_s = duration_s;
  const auto trace = workload::run_benchmark(spec, target, workload::constant_excitation(delta_spl, factor),
                                             {cal.noise_sigma_fraction}, rng);
  const auto n = static_cast<double>(std::llround(duration_s / spec.sample_period_s));
  double sum = 0.0;
  for (const auto& s : trace.samples) sum += s.mb_s;
  return n > 0 ? sum / n : 0.0;
}

struct TrialStats {
  double mean = 0.0;
  double stddev = 0.0;
};

TrialStats stats(const std::vector<double>& v) {
  TrialStats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

void check_trials(int trials, double duration_s) {
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (!(duration_s > 0.0)) throw ValidationError("duration_s must be > 0");
}

// Trial means for one operating point.
std::vector<double> trial_means(const Calibration& cal, Environment env, const ArraySpec& array,
                                int trials, double duration_s, WorkloadKind kind, double delta_spl,
                                double factor, std::uint64_t seed, const std::string& label) {
  std::vector<double> out;
  for (int t = 0; t < trials; ++t) {
    const auto idx = static_cast<std::uint64_t>(t);
    auto target = make_array(cal, env, array, derive_seed(seed, label, idx), label);
    auto rng = derive_rng(seed, label + "/noise", idx);
    out.push_back(benchmark_mean(std::move(target), duration_s, kind, delta_spl, factor, cal, rng));
  }
  return out;
}

}  // namespace

bool is_flagged(double normalized_throughput, double flag_decrease) {
  return 1.0 - normalized_throughput > flag_decrease;
}

std::vector<SweepPoint> frequency_sweep(const SweepParams& p, const Calibration& cal) {
  check_trials(p.trials, p.duration_s);
  if (!(p.step_hz > 0.0) || p.start_hz <= 0.0 || p.stop_hz < p.start_hz) {
    throw ValidationError("sweep: need 0 < start_hz <= stop_hz and step_hz > 0");
  }
  std::vector<SweepPoint> out;
  const auto n = static_cast<long long>(std::floor((p.stop_hz - p.start_hz) / p.step_hz + 1e-9));
  for (long long i = 0; i <= n; ++i) {
    const double f = p.start_hz + static_cast<double>(i) * p.step_hz;
    const double factor = acoustics::resonance_gain(f, cal.resonance);
    const auto means = trial_means(cal, p.environment, p.array, p.trials, p.duration_s,
                                   WorkloadKind::kSequentialWrite, p.delta_spl, factor, p.seed,
                                   fmt::format("sweep/{}", i));
    const double norm = stats(means).mean / cal.disk.baseline_throughput;
    out.push_back({f, norm, is_flagged(norm, p.flag_decrease)});
  }
  return out;
}

std::vector<VolumePoint> volume_curve(const VolumeParams& p, const Calibration& cal) {
  check_trials(p.trials, p.duration_s);
  const double gain = acoustics::resonance_gain(p.frequency_hz, cal.resonance);
  std::vector<VolumePoint> out;
  for (std::size_t i = 0; i < p.levels_db.size(); ++i) {
    const double level = p.levels_db[i];
    const auto means = trial_means(cal, p.environment, p.array, p.trials, p.duration_s, p.workload,
                                   level, gain, p.seed, fmt::format("volume/{}", i));
    const auto s = stats(means);
    out.push_back({level, s.mean, s.mean / cal.disk.baseline_throughput, s.stddev,
                   storage::pes_displacement_ratio(level, PiecewiseLinear(cal.pes_curve))});
  }
  return out;
}

std::vector<PositionPoint> position_study(const PositionParams& p, const Calibration& cal) {
  check_trials(p.trials, p.duration_s);
  const double gain = acoustics::resonance_gain(p.frequency_hz, cal.resonance);
  std::vector<PositionPoint> out;
  for (int loc : p.locations) {
    const double factor = cal.position_factor(loc);
    const auto means = trial_means(cal, Environment::kLab, p.array, p.trials, p.duration_s,
                                   WorkloadKind::kSequentialWrite, p.delta_spl, gain * factor, p.seed,
                                   fmt::format("positions/{}", loc));
    out.push_back({loc, factor, stats(means).mean / cal.disk.baseline_throughput});
  }
  return out;
}

std::vector<AnglePoint> angle_study(const AngleParams& p, const Calibration& cal) {
  check_trials(p.trials, p.duration_s);
  const double gain = acoustics::resonance_gain(p.frequency_hz, cal.resonance);
  const auto table = acoustics::make_angle_table(cal.angle_table);
  auto normalized_at = [&](double angle, const std::string& label) {
    const double factor = acoustics::angle_factor(angle, table);
    const auto means = trial_means(cal, Environment::kLab, p.array, p.trials, p.duration_s,
                                   WorkloadKind::kSequentialWrite, p.delta_spl, gain * factor, p.seed, label);
    return std::pair{factor, stats(means).mean / cal.disk.baseline_throughput};
  };
  const double loss0 = 1.0 - normalized_at(0.0, "angle/0").second;
  std::vector<AnglePoint> out;
  for (double a : p.angles_deg) {
    const auto [factor, norm] = normalized_at(a, fmt::format("angle/{}", a));
    out.push_back({a, factor, norm, loss0 > 0.0 ? (1.0 - norm) / loss0 : 0.0});
  }
  return out;
}

std::vector<DbPoint> db_latency_sweep(const DbParams& p, const Calibration& cal) {
  if (!(p.step_db > 0.0) || p.stop_db < p.start_db) {
    throw ValidationError("db-latency: need start_db <= stop_db and step_db > 0");
  }
  std::vector<DbPoint> out;
  const auto n = static_cast<long long>(std::floor((p.stop_db - p.start_db) / p.step_db + 1e-9));
  for (int nodes : p.underwater_nodes) {
    distsys::DbCluster cluster = cal.db;
    cluster.underwater_node_count = nodes;
    cluster.validate();
    for (long long i = 0; i <= n; ++i) {
      const double level = p.start_db + static_cast<double>(i) * p.step_db;
      out.push_back({nodes, level, distsys::db_normalized_latency(cluster, level)});
    }
  }
  return out;
}

std::vector<FemPoint> fem_attenuation(const FemParams& p) {
  if (p.alpha_np_per_km < 0.0) throw ValidationError("fem-attenuation: alpha must be >= 0");
  std::vector<FemPoint> out;
  for (double d : p.distances_m) {
    out.push_back({d, acoustics::attenuate_amplitude(p.base_displacement_nm, p.alpha_np_per_km / 1000.0, d)});
  }
  return out;
}

HitRatioRow cache_hit_ratio(const Calibration& cal, WorkloadKind kind, double cache_gb,
                            std::size_t draws, std::uint64_t seed) {
  storage::CacheConfig cfg = cal.cache;
  cfg.cache_size_gb = cache_gb;
  HitRatioRow row{kind, cache_gb, draws, 0, storage::hit_probability(cfg, kind)};
  auto rng = derive_rng(seed, fmt::format("cache/hits/{}/{}", to_string(kind), cache_gb));
  for (std::size_t i = 0; i < draws; ++i) {
    if (storage::cache_serve(cfg, kind, false, rng).hit) ++row.hits;
  }
  return row;
}

std::vector<double> cache_latency_samples(const Calibration& cal, WorkloadKind kind, double cache_gb,
                                          bool attacked, std::size_t n, std::uint64_t seed) {
  storage::CacheConfig cfg = cal.cache;
  cfg.cache_size_gb = cache_gb;
  auto rng = derive_rng(seed, fmt::format("cache/latency/{}/{}/{}", to_string(kind), cache_gb,
                                          attacked ? "attacked" : "benign"));
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(storage::cache_serve(cfg, kind, attacked, rng).latency_ms);
  return out;
}

std::vector<SniaPoint> snia_replay(const SniaParams& p, const Calibration& cal) {
  if (p.trials < 1) throw ValidationError("snia-replay: trials must be >= 1");
  if (!(p.time_compression > 0.0)) throw ValidationError("snia-replay: time_compression must be > 0");
  const double gain = acoustics::resonance_gain(p.frequency_hz, cal.resonance);
  std::vector<SniaPoint> out;
  for (const auto& name : p.traces) {
    std::vector<workload::TraceRequest> requests;
    if (p.trace_dir) {
      requests = workload::load_msr_trace(*p.trace_dir / (name + ".csv"), p.requests);
      if (p.time_compression != 1.0) {
        for (auto& r : requests) r.timestamp_s /= p.time_compression;
      }
    } else {
      auto profile = workload::msr_profile(name);
      profile.requests = p.requests;
      profile.span_s /= p.time_compression;
      auto rng = derive_rng(p.seed, "snia/trace/" + name);
      requests = workload::synthesize_trace(profile, cal.disk.baseline_throughput, rng);
    }
    for (int trial = 0; trial < p.trials; ++trial) {
      const std::string label = fmt::format("snia/{}/{}", name, trial);
      const auto pristine = make_array(cal, Environment::kLab, p.array, p.seed, label);
      const double budget = workload::baseline_wall_budget(requests, pristine, p.tick_s);
      for (double level : p.levels_db) {
        auto target = pristine;
        const auto r = workload::replay_trace(requests, target, workload::constant_excitation(level, gain),
                                              budget, p.tick_s);
        out.push_back({name, level, trial, requests.size(), r.issued, r.fulfilled, r.storage_failed, r.failed_at_s});
      }
    }
  }
  return out;
}

namespace {

workload::ThroughputTrace detector_trace(const Calibration& cal, const DetectParams& p, int disk,
                                         double level_db, engine::RngStream& rng) {
  storage::DiskModel m;
  m.name = fmt::format("hdd{}", disk + 1);
  m.baseline_throughput = cal.disk.baseline_throughput;
  m.write_curve = cal.lab.write_curve;
  m.read_curve = cal.lab.read_curve;
  m.unresponsive_threshold_db = cal.disk.unresponsive_threshold_db;
  m.unresponsive_dwell_s = cal.disk.unresponsive_dwell_s;
  auto target = workload::StorageTarget::single_disk(std::move(m));
  workload::WorkloadSpec spec;
  spec.duration_s = p.duration_s;
  const double gain = acoustics::resonance_gain(p.frequency_hz, cal.resonance);
  auto trace = workload::run_benchmark(spec, target, workload::constant_excitation(level_db, gain),
                                       {cal.noise_sigma_fraction}, rng);
  trace.labels["disk"] = fmt::format("hdd{}", disk + 1);
  trace.labels["delta_spl"] = engine::format_number(level_db);
  return trace;
}

void check_detect(const DetectParams& p) {
  if (p.disks < 1) throw ValidationError("detect: disks must be >= 1");
  if (p.profile_traces < 2) throw ValidationError("detect: profile_traces must be >= 2");
  if (p.pool_traces < 1) throw ValidationError("detect: pool_traces must be >= 1");
  if (!(p.duration_s > 0.0)) throw ValidationError("detect: duration_s must be > 0");
}

}  // namespace

std::vector<detector::DiskProfile> build_profiles(const DetectParams& p, const Calibration& cal) {
  check_detect(p);
  std::vector<detector::DiskProfile> out;
  for (int d = 0; d < p.disks; ++d) {
    std::vector<workload::ThroughputTrace> traces;
    for (int i = 0; i < p.profile_traces; ++i) {
      auto rng = derive_rng(p.seed, fmt::format("detect/profile/hdd{}", d + 1), static_cast<std::uint64_t>(i));
      traces.push_back(detector_trace(cal, p, d, 0.0, rng));
    }
    out.push_back(detector::profile_disk(fmt::format("hdd{}", d + 1), std::move(traces)));
  }
  return out;
}

detector::Pools build_pools(const DetectParams& p, const Calibration& cal, double level_db) {
  check_detect(p);
  detector::Pools pools;
  const std::string lv = engine::format_number(level_db);
  for (int d = 0; d < p.disks; ++d) {
    std::vector<workload::ThroughputTrace> benign;
    std::vector<workload::ThroughputTrace> attacked;
    for (int i = 0; i < p.pool_traces; ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      auto rb = derive_rng(p.seed, fmt::format("detect/benign/{}/hdd{}", lv, d + 1), idx);
      benign.push_back(detector_trace(cal, p, d, 0.0, rb));
      auto ra = derive_rng(p.seed, fmt::format("detect/attacked/{}/hdd{}", lv, d + 1), idx);
      attacked.push_back(detector_trace(cal, p, d, level_db, ra));
    }
    pools.benign.push_back(std::move(benign));
    pools.attacked.push_back(std::move(attacked));
  }
  return pools;
}

std::vector<DetectPoint> detect_eval(const DetectParams& p, const Calibration& cal,
                                     const std::vector<detector::DiskProfile>& profiles) {
  if (static_cast<int>(profiles.size()) != p.disks) {
    throw ValidationError(fmt::format("detect-eval: {} profiles for {} disks", profiles.size(), p.disks));
  }
  std::vector<DetectPoint> out;
  for (double level : p.levels_db) {
    const auto pools = build_pools(p, cal, level);
    const auto seed = derive_seed(p.seed, "detect/eval/" + engine::format_number(level));
    out.push_back({level, detector::evaluate(profiles, pools, p.combinations, seed)});
  }
  return out;
}

engine::ScenarioConfig default_hdfs_scenario() {
  return engine::parse_scenario(std::string(kHdfsCascadeScenario), {}, "hdfs_cascade.json");
}

engine::ScenarioConfig default_vm_scenario() {
  return engine::parse_scenario(std::string(kVmMigrationScenario), {}, "vm_migration.json");
}

double VmTrial::reduction() const {
  if (baseline_underwater <= 0) return 0.0;
  return 1.0 - static_cast<double>(attacked_underwater) / static_cast<double>(baseline_underwater);
}

namespace {

long long summary_int(const engine::Summary& s, const std::string& key) {
  const std::string* v = s.find(key);
  return v ? std::stoll(*v) : 0;
}

}  // namespace

VmTrial vm_migration_trial(const engine::ScenarioConfig& config, const Calibration& cal,
                           std::uint64_t seed, const std::string& underwater_host) {
  auto attack = config;
  attack.seed = seed;
  auto baseline = attack;
  baseline.source.schedule = acoustics::VolumeSchedule({{0.0, 0.0, false}});
  const auto a = engine::run(attack, cal);
  const auto b = engine::run(baseline, cal);
  VmTrial t;
  t.seed = seed;
  t.baseline_underwater = summary_int(b.summary, "vm.assigned." + underwater_host);
  t.attacked_underwater = summary_int(a.summary, "vm.assigned." + underwater_host);
  t.unfinished_underwater = summary_int(a.summary, "vm.unfinished." + underwater_host);
  t.blocked_underwater = summary_int(a.summary, "vm.blocked." + underwater_host);
  return t;
}

}  // namespace udc::cli
