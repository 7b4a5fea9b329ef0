#include "udcsim/storage.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "udcsim/error.hpp"

namespace udc {

std::optional<WorkloadKind> parse_workload_kind(std::string_view text) noexcept {
  if (text == "sequential-write" || text == "SW" || text == "sw") return WorkloadKind::kSequentialWrite;
  if (text == "sequential-read" || text == "SR" || text == "sr") return WorkloadKind::kSequentialRead;
  if (text == "random-write" || text == "RW" || text == "rw") return WorkloadKind::kRandomWrite;
  if (text == "random-read" || text == "RR" || text == "rr") return WorkloadKind::kRandomRead;
  return std::nullopt;
}

}  // namespace udc

namespace udc::storage {

DegradationCurve::DegradationCurve(std::vector<Knot> knots)
    : table_(std::move(knots), "degradation curve", 1), identity_(false) {
  if (!table_.non_increasing()) {
    throw ConfigError("degradation curve: multipliers must be non-increasing in level");
  }
  for (const auto& k : table_.knots()) {
    if (k.y < 0.0 || k.y > 1.0) throw ConfigError("degradation curve: multipliers outside [0, 1]");
  }
}

DegradationCurve DegradationCurve::identity() { return DegradationCurve(); }

double DegradationCurve::operator()(double delta_spl) const {
  if (identity_) return 1.0;
  if (delta_spl < table_.front_x()) return 1.0;
  return table_(delta_spl);
}

const DegradationCurve& DiskModel::curve_for(WorkloadKind kind) const {
  if (!is_write(kind) && read_curve) return *read_curve;
  return write_curve;
}

void DiskModel::validate() const {
  if (baseline_throughput <= 0.0) throw ConfigError(name + ": baseline_throughput must be > 0");
  if (unresponsive_dwell_s < 0.0) throw ConfigError(name + ": unresponsive_dwell_s must be >= 0");
  if (permanent_damage_rate < 0.0) throw ConfigError(name + ": permanent_damage_rate must be >= 0");
  if (sensitivity_offset_db < 0.0) throw ConfigError(name + ": sensitivity_offset_db must be >= 0");
  if (kind == DiskKind::kSolidState &&
      (!write_curve.is_identity() || (read_curve && !read_curve->is_identity()))) {
    throw ConfigError(name + ": solid-state disks must use the identity degradation curve");
  }
}

double degradation_multiplier(double delta_spl, const DegradationCurve& curve,
                              double combined_factor) {
  if (combined_factor < 0.0 || combined_factor > 1.0) {
    throw ValidationError("degradation_multiplier: combined factor must lie in [0, 1]");
  }
  const double drop = 1.0 - curve(delta_spl);
  return std::clamp(1.0 - drop * combined_factor, 0.0, 1.0);
}

PiecewiseLinear default_pes_curve() {
  return PiecewiseLinear({{46.0, 0.0}, {64.0, 83.0}}, "PES curve");
}

double pes_displacement_ratio(double delta_spl, const PiecewiseLinear& curve) {
  return curve(delta_spl);
}

double pes_displacement_ratio(double delta_spl) {
  static const PiecewiseLinear curve = default_pes_curve();
  return curve(delta_spl);
}

DiskState disk_step(const DiskState& state, const DiskModel& model,
                    const acoustics::EffectiveExcitation& excitation, double combined_factor,
                    double dt) {
  if (!(dt > 0.0)) throw ValidationError("disk_step: dt must be > 0");
  if (model.kind == DiskKind::kSolidState) return state;

  DiskState next = state;
  const double perceived = excitation.delta_spl - model.sensitivity_offset_db;
  const bool over_threshold = combined_factor > 0.0 && perceived >= model.unresponsive_threshold_db;

  if (next.responsive) {
    if (over_threshold) {
      next.dwell_accumulator_s += dt;
      if (next.dwell_accumulator_s >= model.unresponsive_dwell_s) next.responsive = false;
    } else {
      next.dwell_accumulator_s = 0.0;
    }
  } else {
    next.permanent_multiplier =
        std::max(0.0, next.permanent_multiplier - model.permanent_damage_rate * dt);
    if (next.permanent_multiplier <= 0.0) next.detected = false;
    if (!over_threshold && next.detected) {
      next.responsive = true;
      next.dwell_accumulator_s = 0.0;
    }
  }

  if (!next.detected) next.responsive = false;
  if (next.responsive) {
    next.current_multiplier =
        next.permanent_multiplier *
        degradation_multiplier(perceived, model.write_curve, combined_factor);
    next.read_multiplier =
        next.permanent_multiplier *
        degradation_multiplier(perceived, model.curve_for(WorkloadKind::kSequentialRead),
                               combined_factor);
  } else {
    next.current_multiplier = 0.0;
    next.read_multiplier = 0.0;
  }
  return next;
}

std::string_view to_string(ArrayStatus s) noexcept {
  switch (s) {
    case ArrayStatus::kHealthy: return "healthy";
    case ArrayStatus::kDegraded: return "degraded";
    case ArrayStatus::kFailed: return "failed";
  }
  return "unknown";
}

std::string_view to_string(RaidEventKind k) noexcept {
  switch (k) {
    case RaidEventKind::kMemberStalled: return "member-unresponsive";
    case RaidEventKind::kMemberRecovered: return "member-responsive";
    case RaidEventKind::kMemberDropped: return "member-dropped";
    case RaidEventKind::kDegraded: return "array-degraded";
    case RaidEventKind::kFailed: return "array-failed";
  }
  return "unknown";
}

Raid5Array::Raid5Array(std::size_t member_count, Raid5Config config)
    : config_(config),
      dropped_(member_count, false),
      stalled_(member_count, false),
      stalled_for_(member_count, 0.0) {
  if (member_count < 3) throw ConfigError("RAID 5 needs at least three members");
  if (config_.drop_timeout_s < 0.0 || config_.degraded_drop_timeout_s < 0.0) {
    throw ConfigError("RAID 5 drop timeouts must be >= 0");
  }
}

std::size_t Raid5Array::active_count() const noexcept {
  return static_cast<std::size_t>(std::count(dropped_.begin(), dropped_.end(), false));
}

std::vector<std::size_t> Raid5Array::active_members() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dropped_.size(); ++i) {
    if (!dropped_[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Raid5Array::dropped_members() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dropped_.size(); ++i) {
    if (dropped_[i]) out.push_back(i);
  }
  return out;
}

void Raid5Array::check_states(std::span<const DiskState> states) const {
  if (states.size() != dropped_.size()) {
    throw ValidationError(fmt::format("RAID 5: expected {} member states, got {}",
                                      dropped_.size(), states.size()));
  }
}

bool Raid5Array::can_serve(std::span<const DiskState> states) const {
  check_states(states);
  if (status_ == ArrayStatus::kFailed) return false;
  for (std::size_t i = 0; i < dropped_.size(); ++i) {
    if (!dropped_[i] && (!states[i].responsive || !states[i].detected)) return false;
  }
  return true;
}

std::vector<RaidEvent> Raid5Array::drop(std::size_t member) {
  std::vector<RaidEvent> events;
  if (status_ == ArrayStatus::kFailed || dropped_.at(member)) return events;
  dropped_[member] = true;
  stalled_[member] = false;
  stalled_for_[member] = 0.0;
  events.push_back({RaidEventKind::kMemberDropped, member});
  // Single parity: one loss degrades, a second loss (or fewer than three
  // members left) is fatal.
  const std::size_t losses = dropped_.size() - active_count();
  if (losses >= 2 || active_count() < 3) {
    status_ = ArrayStatus::kFailed;
    events.push_back({RaidEventKind::kFailed, member});
  } else {
    status_ = ArrayStatus::kDegraded;
    events.push_back({RaidEventKind::kDegraded, member});
  }
  return events;
}

std::vector<RaidEvent> Raid5Array::step(std::span<const DiskState> states, double dt) {
  check_states(states);
  std::vector<RaidEvent> events;
  if (status_ == ArrayStatus::kFailed) return events;

  std::vector<std::size_t> to_drop;
  for (std::size_t i = 0; i < dropped_.size(); ++i) {
    if (dropped_[i]) continue;
    const bool unresponsive = !states[i].responsive || !states[i].detected;
    if (unresponsive && !stalled_[i]) {
      stalled_[i] = true;
      stalled_for_[i] = 0.0;
      events.push_back({RaidEventKind::kMemberStalled, i});
      continue;
    }
    if (!unresponsive && stalled_[i]) {
      stalled_[i] = false;
      stalled_for_[i] = 0.0;
      events.push_back({RaidEventKind::kMemberRecovered, i});
      continue;
    }
    if (unresponsive) {
      stalled_for_[i] += dt;
      const double timeout = status_ == ArrayStatus::kHealthy ? config_.drop_timeout_s
                                                              : config_.degraded_drop_timeout_s;
      if (stalled_for_[i] >= timeout) to_drop.push_back(i);
    }
  }
  for (std::size_t m : to_drop) {
    auto dropped = drop(m);
    events.insert(events.end(), dropped.begin(), dropped.end());
    if (status_ == ArrayStatus::kFailed) break;
  }
  return events;
}

namespace {

template <typename Rate>
double bottleneck(const Raid5Array& array, std::span<const DiskState> states,
                  std::span<const DiskModel> models, Rate rate) {
  if (array.status() == ArrayStatus::kFailed) throw UnavailableError("RAID 5 array has failed");
  if (states.size() != array.member_count() || models.size() != array.member_count()) {
    throw ValidationError("RAID 5: member state/model count mismatch");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i : array.active_members()) {
    if (!states[i].responsive || !states[i].detected) return 0.0;
    best = std::min(best, models[i].baseline_throughput * rate(states[i]));
  }
  return best;
}

}  // namespace

double raid5_throughput(const Raid5Array& array, std::span<const DiskState> states,
                        std::span<const DiskModel> models) {
  return bottleneck(array, states, models, [](const DiskState& s) { return s.current_multiplier; });
}

double raid5_read_throughput(const Raid5Array& array, std::span<const DiskState> states,
                             std::span<const DiskModel> models) {
  return bottleneck(array, states, models, [](const DiskState& s) { return s.read_multiplier; });
}

void CacheConfig::validate() const {
  if (cache_size_gb <= 0.0) throw ConfigError("cache: size must be > 0");
  for (const auto& [key, p] : hit_ratio_table) {
    if (p < 0.0 || p > 1.0) {
      throw ConfigError(fmt::format("cache: hit ratio for {} @ {} GB outside [0, 1]",
                                    to_string(key.first), key.second));
    }
  }
  for (const auto* band : {&hit_latency_band, &miss_latency_band_benign, &miss_latency_band_attacked}) {
    if (band->lo_ms > band->hi_ms || band->lo_ms < 0.0) {
      throw ConfigError("cache: latency band lower bound exceeds upper bound");
    }
  }
}

double hit_probability(const CacheConfig& cfg, WorkloadKind kind) {
  auto it = cfg.hit_ratio_table.find({kind, cfg.cache_size_gb});
  if (it == cfg.hit_ratio_table.end()) {
    throw ConfigError(fmt::format("cache: no hit ratio for {} at {} GB", to_string(kind),
                                  cfg.cache_size_gb));
  }
  return it->second;
}

CacheResult cache_serve(const CacheConfig& cfg, WorkloadKind kind, bool attacked,
                        engine::RngStream& rng) {
  const double p = hit_probability(cfg, kind);
  CacheResult r;
  r.hit = rng.bernoulli(p);
  const LatencyBand& band = r.hit ? cfg.hit_latency_band
                                  : (attacked ? cfg.miss_latency_band_attacked
                                              : cfg.miss_latency_band_benign);
  r.latency_ms = rng.uniform(band.lo_ms, band.hi_ms);
  return r;
}

}  // namespace udc::storage
