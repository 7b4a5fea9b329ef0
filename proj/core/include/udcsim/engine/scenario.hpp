#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "udcsim/acoustics.hpp"
#include "udcsim/calibration.hpp"
#include "udcsim/distsys.hpp"
#include "udcsim/engine/metrics.hpp"
#include "udcsim/storage.hpp"
#include "udcsim/workload_kind.hpp"

namespace udc::engine {

struct DiskSpec {
  std::string name;
  storage::DiskKind kind = storage::DiskKind::kMechanical;
  double sensitivity_offset_db = 0.0;
  // Unset fields come from the calibration; an unset threshold also gets the
  // seeded per-disk jitter.
  std::optional<double> threshold_db;
  std::optional<double> dwell_s;
  std::optional<double> permanent_damage_rate;
  std::optional<double> baseline_throughput;
};

enum class StorageType { kSingleDisk, kRaid5 };

struct StorageSpec {
  StorageType type = StorageType::kRaid5;
  std::vector<DiskSpec> disks;
  std::optional<double> drop_timeout_s;
  std::optional<double> degraded_drop_timeout_s;
};

struct NodeSpec {
  std::string id;
  distsys::NodeLocation location = distsys::NodeLocation::kOnLand;
  StorageSpec storage;
  double vm_capacity = 8.0;
};

struct SourceSpec {
  // One of the two: level at the enclosure above the noise floor, or the
  // source level itself, attenuated over `distance_m`.
  std::optional<double> delta_spl;
  std::optional<double> amplitude_spl;
  double frequency_hz = 5100.0;
  double orientation_deg = 0.0;
  std::optional<double> distance_m;  // default: the environment's reference distance
  int position = 1;                  // injection location
  acoustics::VolumeSchedule schedule;
};

struct VmWorkloadSpec {
  int count = 50;
  double interval_s = 42.0;
  double init_s = 2.0;
  double prolog_s = 20.0;
  double boot_s = 10.0;
  double running_s = 120.0;
  double duration_jitter = 0.1;  // base durations scaled by U(1-j, 1+j)
  double monitor_interval_s = 30.0;
};

struct ReplicationSpec {
  int blocks = 0;  // 0: no replica tracking
  int factor = 2;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::optional<std::filesystem::path> calibration;
  std::uint64_t seed = 1;
  double horizon_s = 60.0;
  double tick_s = 1.0;
  Environment environment = Environment::kLab;
  SourceSpec source;
  std::vector<NodeSpec> nodes;
  double heartbeat_s = 3.0;
  WorkloadKind workload = WorkloadKind::kSequentialWrite;
  std::optional<double> noise_sigma;
  std::optional<VmWorkloadSpec> vms;
  ReplicationSpec replication;

  // Every problem found, empty when the scenario can run.
  std::vector<std::string> problems(const Calibration& cal) const;
  void validate(const Calibration& cal) const;  // throws ConfigErrors
};

// Collects structural problems while reading and throws ConfigErrors listing
// all of them. A relative calibration path is resolved against `base_dir`.
ScenarioConfig parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir = {},
                              const std::string& origin = "scenario");
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct RunResult {
  MetricsLog metrics;
  EventLog events;
  Summary summary;
};

// Validates first; the logs are a pure function of (config, calibration).
RunResult run(const ScenarioConfig& config, const Calibration& calibration);

}  // namespace udc::engine
