#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "udcsim/acoustics.hpp"
#include "udcsim/engine/rng.hpp"
#include "udcsim/storage.hpp"
#include "udcsim/workload_kind.hpp"

namespace udc::workload {

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kSequentialWrite;
  double duration_s = 30.0;
  std::uint64_t request_size = 1 << 20;
  std::uint64_t partition_size = 100ull << 20;
  double sample_period_s = 1.0;

  void validate() const;
};

// A disk or a RAID-5 array together with its evolving member state.
class StorageTarget {
 public:
  static StorageTarget single_disk(storage::DiskModel model);
  static StorageTarget raid5(std::vector<storage::DiskModel> models,
                             storage::Raid5Config config = {});

  struct Step {
    double throughput_mb_s = 0.0;  // for the requested operation type
    bool serving = true;
    bool failed = false;
    std::vector<storage::RaidEvent> events;
  };

  Step step(const acoustics::EffectiveExcitation& excitation, double dt, WorkloadKind kind);

  // Current rate without advancing state.
  double rate(WorkloadKind kind) const;

  bool is_array() const noexcept { return array_.has_value(); }
  bool failed() const noexcept;
  bool serving() const;
  double baseline_throughput() const;

  const std::vector<storage::DiskModel>& models() const noexcept { return models_; }
  const std::vector<storage::DiskState>& states() const noexcept { return states_; }
  const storage::Raid5Array* array() const noexcept { return array_ ? &*array_ : nullptr; }

 private:
  StorageTarget() = default;

  std::vector<storage::DiskModel> models_;
  std::vector<storage::DiskState> states_;
  std::optional<storage::Raid5Array> array_;
};

using ExcitationFeed = std::function<acoustics::EffectiveExcitation(double t)>;

ExcitationFeed constant_excitation(double delta_spl, double combined_factor = 1.0);

struct NoiseModel {
  double sigma_fraction = 0.03;  // zero-mean Gaussian, relative to the sample
};

struct ThroughputSample {
  double t = 0.0;
  double mb_s = 0.0;
};

struct ThroughputTrace {
  std::vector<ThroughputSample> samples;
  double sample_period_s = 1.0;
  std::map<std::string, std::string> labels;
  bool aborted = false;

  std::vector<double> values() const;
  double mean() const;

  // "# key=value" label lines, then "t_s,throughput_mb_s".
  void write_csv(std::ostream& out) const;
  static ThroughputTrace read_csv(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static ThroughputTrace load(const std::filesystem::path& path);
};

ThroughputTrace run_benchmark(const WorkloadSpec& spec, StorageTarget& target,
                              const ExcitationFeed& feed, const NoiseModel& noise,
                              engine::RngStream& rng);

enum class IoOp { kRead, kWrite };

struct TraceRequest {
  double timestamp_s = 0.0;  // relative to the first request
  IoOp operation = IoOp::kRead;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
};

// MSR Cambridge CSV: Timestamp,Hostname,DiskNumber,Type,Offset,Size,ResponseTime
// with Timestamp in 100 ns Windows ticks. Reads at most `max_requests`.
// `warnings` (optional) receives non-fatal notes such as an empty file.
std::vector<TraceRequest> load_msr_trace(const std::filesystem::path& path,
                                         std::size_t max_requests = 50000,
                                         std::vector<std::string>* warnings = nullptr);
std::vector<TraceRequest> parse_msr_trace(std::istream& in, std::size_t max_requests = 50000,
                                          std::vector<std::string>* warnings = nullptr);

void write_msr_trace(std::ostream& out, const std::vector<TraceRequest>& requests,
                     const std::string& hostname, std::uint64_t base_ticks = 128166372000000000ull);

struct TraceProfile {
  std::string name = "web";
  std::size_t requests = 50000;
  double span_s = 1320.0;           // time over which requests are issued
  double write_fraction = 0.5;
};

// Named replay profiles with issue spans of ~38 min (mds), ~3 min (prxy)
// and ~22 min (web).
TraceProfile msr_profile(const std::string& name);

// Seeded synthetic trace whose total demand equals `service_mb_s` over
// the issue span, so a baseline replay just keeps up.
std::vector<TraceRequest> synthesize_trace(const TraceProfile& profile, double service_mb_s,
                                           engine::RngStream& rng);

struct ReplayResult {
  std::size_t issued = 0;
  std::size_t fulfilled = 0;
  bool storage_failed = false;
  std::optional<double> failed_at_s;
  double elapsed_s = 0.0;
  std::vector<std::pair<double, storage::RaidEvent>> raid_events;
};

// Single-queue fluid replay: within each tick the head request is served at
// the array's current rate for its operation type.
ReplayResult replay_trace(const std::vector<TraceRequest>& requests, StorageTarget& target,
                          const ExcitationFeed& feed, double wall_limit_s, double tick_s = 1.0);

// Wall-clock budget (whole ticks, one spare) that a fresh copy of `target`
// needs at zero excitation.
double baseline_wall_budget(const std::vector<TraceRequest>& requests,
                            const StorageTarget& pristine_target, double tick_s = 1.0);

}  // namespace udc::workload
