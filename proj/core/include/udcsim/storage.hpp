#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "udcsim/acoustics.hpp"
#include "udcsim/engine/rng.hpp"
#include "udcsim/interp.hpp"
#include "udcsim/workload_kind.hpp"

namespace udc::storage {

enum class DiskKind { kMechanical, kSolidState };

// Throughput multiplier vs level above the noise floor. Below the first
// knot the disk is unaffected; above the last knot the last value holds.
class DegradationCurve {
 public:
  DegradationCurve() = default;
  explicit DegradationCurve(std::vector<Knot> knots);

  static DegradationCurve identity();

  double operator()(double delta_spl) const;
  const PiecewiseLinear& table() const noexcept { return table_; }
  bool is_identity() const noexcept { return identity_; }

 private:
  PiecewiseLinear table_;
  bool identity_ = true;
};

struct DiskModel {
  std::string name = "hdd";
  DiskKind kind = DiskKind::kMechanical;
  double baseline_throughput = 100.0;  // MB/s
  DegradationCurve write_curve;
  std::optional<DegradationCurve> read_curve;  // falls back to write_curve
  double unresponsive_threshold_db = 36.0;
  double unresponsive_dwell_s = 60.0;
  double permanent_damage_rate = 0.0;  // multiplier lost per second unresponsive
  // Level this disk perceives below the enclosure level; differences between
  // members make one disk the array bottleneck.
  double sensitivity_offset_db = 0.0;

  const DegradationCurve& curve_for(WorkloadKind kind) const;
  void validate() const;
};

struct DiskState {
  bool responsive = true;
  double current_multiplier = 1.0;
  double read_multiplier = 1.0;
  double dwell_accumulator_s = 0.0;
  double permanent_multiplier = 1.0;
  bool detected = true;

  friend bool operator==(const DiskState&, const DiskState&) = default;
};

double degradation_multiplier(double delta_spl, const DegradationCurve& curve,
                              double combined_factor);

// Position-error-signal displacement (percent of track tolerance) vs level.
PiecewiseLinear default_pes_curve();
double pes_displacement_ratio(double delta_spl, const PiecewiseLinear& curve);
double pes_displacement_ratio(double delta_spl);

DiskState disk_step(const DiskState& state, const DiskModel& model,
                    const acoustics::EffectiveExcitation& excitation, double combined_factor,
                    double dt);

enum class ArrayStatus { kHealthy, kDegraded, kFailed };
std::string_view to_string(ArrayStatus s) noexcept;

enum class RaidEventKind { kMemberStalled, kMemberRecovered, kMemberDropped, kDegraded, kFailed };
std::string_view to_string(RaidEventKind k) noexcept;

struct RaidEvent {
  RaidEventKind kind;
  std::size_t member = 0;  // meaningful for member events
};

struct Raid5Config {
  double drop_timeout_s = 108.0;
  // Applied while degraded, where the next drop would be fatal.
  double degraded_drop_timeout_s = 648.0;
};

class Raid5Array {
 public:
  Raid5Array(std::size_t member_count, Raid5Config config = {});

  ArrayStatus status() const noexcept { return status_; }
  const Raid5Config& config() const noexcept { return config_; }
  std::size_t member_count() const noexcept { return dropped_.size(); }
  std::size_t active_count() const noexcept;
  bool is_active(std::size_t member) const { return !dropped_.at(member); }
  std::vector<std::size_t> active_members() const;
  std::vector<std::size_t> dropped_members() const;
  double unresponsive_for(std::size_t member) const { return stalled_for_.at(member); }

  // True when every active member responds, i.e. requests are not stalled.
  bool can_serve(std::span<const DiskState> states) const;

  // Advances drop timers; emits stall/recovery, drop and status events.
  std::vector<RaidEvent> step(std::span<const DiskState> states, double dt);

  // Administrative removal, bypassing timers.
  std::vector<RaidEvent> drop(std::size_t member);

 private:
  void check_states(std::span<const DiskState> states) const;

  Raid5Config config_;
  std::vector<bool> dropped_;
  std::vector<bool> stalled_;
  std::vector<double> stalled_for_;
  ArrayStatus status_ = ArrayStatus::kHealthy;
};

// Write throughput, bounded by the slowest active member; zero while any
// active member is unresponsive. Throws UnavailableError on a failed array.
double raid5_throughput(const Raid5Array& array, std::span<const DiskState> states,
                        std::span<const DiskModel> models);

double raid5_read_throughput(const Raid5Array& array, std::span<const DiskState> states,
                             std::span<const DiskModel> models);

inline std::vector<RaidEvent> raid5_step(Raid5Array& array, std::span<const DiskState> states,
                                         double dt) {
  return array.step(states, dt);
}

struct LatencyBand {
  double lo_ms = 0.0;
  double hi_ms = 0.0;
};

struct CacheConfig {
  double cache_size_gb = 1.0;
  std::string policy = "write-back";
  // (workload, cache size GB) -> hit probability
  std::map<std::pair<WorkloadKind, double>, double> hit_ratio_table;
  LatencyBand hit_latency_band{1.0, 5.0};
  LatencyBand miss_latency_band_benign{1.0, 200.0};
  LatencyBand miss_latency_band_attacked{200.0, 800.0};

  void validate() const;
};

double hit_probability(const CacheConfig& cfg, WorkloadKind kind);

struct CacheResult {
  bool hit = false;
  double latency_ms = 0.0;
};

CacheResult cache_serve(const CacheConfig& cfg, WorkloadKind kind, bool attacked,
                        engine::RngStream& rng);

}  // namespace udc::storage
