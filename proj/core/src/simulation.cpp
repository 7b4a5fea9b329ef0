#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <set>

#include <fmt/format.h>

#include "udcsim/engine/events.hpp"
#include "udcsim/engine/rng.hpp"
#include "udcsim/engine/scenario.hpp"
#include "udcsim/error.hpp"
#include "udcsim/workload.hpp"

namespace udc::engine {

namespace {

constexpr std::array<distsys::VmState, 4> kVmStages = {
    distsys::VmState::kInit, distsys::VmState::kProlog, distsys::VmState::kBoot,
    distsys::VmState::kRunning};

int status_code(distsys::NodeStatus s) {
  switch (s) {
    case distsys::NodeStatus::kLive: return 0;
    case distsys::NodeStatus::kBlocked: return 1;
    case distsys::NodeStatus::kRemoved: return 2;
  }
  return 2;
}

struct NodeRuntime {
  const NodeSpec* spec = nullptr;
  std::optional<workload::StorageTarget> target;
  distsys::Node node;
  std::unique_ptr<RngStream> noise;

  bool underwater() const { return node.location == distsys::NodeLocation::kUnderwater; }

  // Level seen by the most sensitive active member.
  double perceived(double delta_spl) const {
    double offset = std::numeric_limits<double>::infinity();
    const auto& models = target->models();
    for (std::size_t i = 0; i < models.size(); ++i) {
      if (target->array() && !target->array()->is_active(i)) continue;
      offset = std::min(offset, models[i].sensitivity_offset_db);
    }
    return std::isfinite(offset) ? delta_spl - offset : 0.0;
  }
};

struct VmRuntime {
  distsys::VirtualMachine vm;
  std::array<double, 4> base{};
  double remaining = 0.0;
  double last_update = 0.0;
  std::optional<std::size_t> host;
  int stage = 0;
};

class Simulation {
 public:
  Simulation(const ScenarioConfig& cfg, const Calibration& cal) : cfg_(cfg), cal_(cal) {
    const auto& env = cal.environment(cfg.environment);
    ctx_ = cal.excitation_context(cfg.environment);
    distance_ = cfg.source.distance_m.value_or(env.reference_distance_m);
    position_factor_ = cal.position_factor(cfg.source.position);
    source_.frequency_hz = cfg.source.frequency_hz;
    source_.orientation_deg = cfg.source.orientation_deg;
    source_.schedule = cfg.source.schedule;
    source_.amplitude_spl = cfg.source.delta_spl
                                ? acoustics::source_spl_for_delta(*cfg.source.delta_spl, ctx_, distance_)
                                : *cfg.source.amplitude_spl;
    source_.validate();
    noise_sigma_ = cfg.noise_sigma.value_or(cal.noise_sigma_fraction);

    for (const auto& ns : cfg.nodes) {
      NodeRuntime rt;
      rt.spec = &ns;
      rt.node.id = ns.id;
      rt.node.location = ns.location;
      rt.node.heartbeat_interval_s = cfg.heartbeat_s;
      rt.noise = std::make_unique<RngStream>(derive_rng(cfg.seed, "noise/" + ns.id));
      std::vector<storage::DiskModel> models;
      for (const auto& d : ns.storage.disks) models.push_back(build_disk(ns, d, env));
      if (ns.storage.type == StorageType::kRaid5) {
        storage::Raid5Config rc = cal.raid;
        if (ns.storage.drop_timeout_s) rc.drop_timeout_s = *ns.storage.drop_timeout_s;
        if (ns.storage.degraded_drop_timeout_s) rc.degraded_drop_timeout_s = *ns.storage.degraded_drop_timeout_s;
        rt.target.emplace(workload::StorageTarget::raid5(std::move(models), rc));
      } else {
        rt.target.emplace(workload::StorageTarget::single_disk(std::move(models.front())));
      }
      nodes_.push_back(std::move(rt));
    }

    if (cfg.replication.blocks > 0) {
      std::vector<std::string> ids;
      for (const auto& n : nodes_) ids.push_back(n.node.id);
      replicas_ = distsys::ReplicaMap::round_robin(cfg.replication.blocks, ids, cfg.replication.factor);
    }

    if (cfg.vms) {
      std::vector<distsys::Host> hosts;
      for (const auto& n : nodes_) hosts.push_back({n.node.id, n.spec->vm_capacity, 1.0, false, 0});
      scheduler_.emplace(std::move(hosts));
      const auto& v = *cfg.vms;
      for (int i = 0; i < v.count; ++i) {
        auto rng = derive_rng(cfg.seed, "vm/durations", static_cast<std::uint64_t>(i));
        VmRuntime vm;
        vm.vm.id = i;
        const std::array<double, 4> base = {v.init_s, v.prolog_s, v.boot_s, v.running_s};
        for (std::size_t k = 0; k < 4; ++k) {
          vm.base[k] = base[k] * rng.uniform(1.0 - v.duration_jitter, 1.0 + v.duration_jitter);
        }
        vms_.push_back(vm);
      }
    }
  }

  RunResult run() {
    for (const auto& step : source_.schedule.steps()) {
      if (step.start_s > cfg_.horizon_s) break;
      const double t = step.start_s;
      queue_.schedule(t, EventKind::kExcitationChange, [this, t] { on_excitation_change(t); });
    }
    if (cfg_.vms) {
      for (std::size_t i = 0; i < vms_.size(); ++i) {
        const double t = static_cast<double>(i) * cfg_.vms->interval_s;
        if (t > cfg_.horizon_s) break;
        queue_.schedule(t, EventKind::kVm, [this, i, t] { on_vm_arrival(i, t); });
      }
      for (long long k = 0;; ++k) {
        const double t = static_cast<double>(k) * cfg_.vms->monitor_interval_s;
        if (t > cfg_.horizon_s) break;
        queue_.schedule(t, EventKind::kVm, [this, t] { on_monitor(t); });
      }
    }
    queue_.schedule(0.0, EventKind::kSampleTick, [this] { on_sample(0); });
    queue_.run_until(cfg_.horizon_s);
    summarize();
    return std::move(result_);
  }

 private:
  double tick_time(long long k) const { return static_cast<double>(k) * cfg_.tick_s; }

  storage::DiskModel build_disk(const NodeSpec& ns, const DiskSpec& d, const EnvironmentCalibration& env) {
    storage::DiskModel m;
    m.name = d.name;
    m.kind = d.kind;
    m.baseline_throughput = d.baseline_throughput.value_or(cal_.disk.baseline_throughput);
    if (d.kind == storage::DiskKind::kMechanical) {
      m.write_curve = env.write_curve;
      m.read_curve = env.read_curve;
    }
    if (d.threshold_db) {
      m.unresponsive_threshold_db = *d.threshold_db;
    } else {
      auto rng = derive_rng(cfg_.seed, "disk/threshold/" + ns.id + "/" + d.name);
      const double j = cal_.disk.threshold_jitter_db;
      m.unresponsive_threshold_db = cal_.disk.unresponsive_threshold_db + rng.uniform(-j, j);
    }
    m.unresponsive_dwell_s = d.dwell_s.value_or(cal_.disk.unresponsive_dwell_s);
    m.permanent_damage_rate = d.permanent_damage_rate.value_or(cal_.disk.permanent_damage_rate);
    m.sensitivity_offset_db = d.sensitivity_offset_db;
    return m;
  }

  acoustics::EffectiveExcitation excitation(double t) const {
    return acoustics::effective_excitation(source_, ctx_, distance_, position_factor_, t);
  }

  acoustics::EffectiveExcitation excitation_for(const NodeRuntime& n, double t) const {
    if (!n.underwater()) return {0.0, 0.0, 0.0};
    return excitation(t);
  }

  void on_excitation_change(double t) {
    const auto& step = source_.schedule.at(t);
    if (!step.active) {
      result_.events.log(t, EventKind::kExcitationChange, "source", "silent");
      return;
    }
    const auto e = excitation(t);
    result_.events.log(t, EventKind::kExcitationChange, "source", "level",
                       fmt::format("delta_spl={};factor={}", format_number(e.delta_spl),
                                   format_number(e.combined_factor)));
  }

  void on_storage(long long k) {
    const double t = tick_time(k);
    const double dt = cfg_.tick_s;
    for (auto& n : nodes_) {
      auto& target = *n.target;
      if (target.failed()) continue;
      const auto before = target.states();
      const auto step = target.step(excitation_for(n, tick_time(k - 1)), dt, cfg_.workload);
      const auto& models = target.models();
      if (!target.is_array()) {
        const bool was = before.front().responsive;
        const bool now = target.states().front().responsive;
        if (was != now) {
          result_.events.log(t, EventKind::kDiskState, n.node.id + "/" + models.front().name,
                             now ? "responsive" : "unresponsive");
        }
      }
      for (const auto& e : step.events) {
        const std::string disk = n.node.id + "/" + models[e.member].name;
        switch (e.kind) {
          case storage::RaidEventKind::kMemberStalled:
            result_.events.log(t, EventKind::kDiskState, disk, "unresponsive");
            break;
          case storage::RaidEventKind::kMemberRecovered:
            result_.events.log(t, EventKind::kDiskState, disk, "responsive");
            break;
          case storage::RaidEventKind::kMemberDropped:
            result_.events.log(t, EventKind::kRaid, disk, "dropped",
                               fmt::format("active={}", target.array()->active_count()));
            break;
          case storage::RaidEventKind::kDegraded:
            result_.events.log(t, EventKind::kRaid, n.node.id + "/array", "degraded");
            break;
          case storage::RaidEventKind::kFailed:
            result_.events.log(t, EventKind::kRaid, n.node.id + "/array", "failed");
            break;
        }
      }
    }
  }

  void on_nodes(long long k) {
    const double t = tick_time(k);
    for (auto& n : nodes_) {
      const distsys::StorageView view{n.target->serving(), n.target->failed()};
      for (const auto& e : distsys::dfs_step(n.node, view, cfg_.tick_s)) {
        result_.events.log(t, EventKind::kNode, n.node.id, std::string(distsys::to_string(e.to)),
                           fmt::format("from={}", distsys::to_string(e.from)));
        if (e.to == distsys::NodeStatus::kRemoved) on_node_removed(n, t);
      }
    }
  }

  void on_node_removed(NodeRuntime& removed, double t) {
    if (scheduler_) scheduler_->set_health(removed.node.id, 0.0, true);
    if (!replicas_) return;
    std::vector<std::string> healthy;
    std::set<std::string> affected;
    for (const auto& n : nodes_) {
      if (n.node.status == distsys::NodeStatus::kLive) healthy.push_back(n.node.id);
      if (n.underwater()) affected.insert(n.node.id);
    }
    auto r = distsys::rereplicate(*replicas_, removed.node.id, healthy, affected);
    int added = 0;
    int under = 0;
    for (const auto& e : r.events) {
      if (e.kind == distsys::MigrationEvent::Kind::kReplicaAdded) {
        ++added;
        result_.events.log(t, EventKind::kNode, "replicas", "replica-added",
                           fmt::format("block={};node={}", e.block, e.node));
      } else {
        ++under;
        result_.events.log(t, EventKind::kNode, "replicas", "under-replicated",
                           fmt::format("block={}", e.block));
      }
    }
    replicas_ = std::move(r.map);
    replicas_added_ += added;
    under_replicated_ += under;
  }

  void on_vm_arrival(std::size_t i, double t) {
    auto& vm = vms_[i];
    vm.vm.entered_at[distsys::VmState::kInit] = t;
    vm.last_update = t;
    vm.remaining = vm.base[0];
    result_.events.log(t, EventKind::kVm, fmt::format("vm/{}", vm.vm.id), "instantiated");
    scheduler_->drain_queue(t);
    place_from_log(t);
    const auto a = scheduler_->submit(vm.vm.id, t);
    if (!a.host) {
      result_.events.log(t, EventKind::kVm, fmt::format("vm/{}", vm.vm.id), "queued");
    }
    place_from_log(t);
  }

  // Applies scheduler placements not yet reflected in VM state.
  void place_from_log(double t) {
    const auto& log = scheduler_->log();
    for (; applied_log_ < log.size(); ++applied_log_) {
      const auto& a = log[applied_log_];
      if (!a.host) continue;
      auto& vm = vms_[static_cast<std::size_t>(a.vm)];
      for (std::size_t h = 0; h < nodes_.size(); ++h) {
        if (nodes_[h].node.id == *a.host) vm.host = h;
      }
      vm.vm.host = a.host;
      vm.last_update = t;
      result_.events.log(t, EventKind::kVm, fmt::format("vm/{}", vm.vm.id), "assigned",
                         fmt::format("host={}", *a.host));
      result_.metrics.record(t, "vm_assigned", 1.0, fmt::format("host={};vm={}", *a.host, vm.vm.id));
    }
  }

  void on_monitor(double t) {
    for (const auto& n : nodes_) {
      const auto& target = *n.target;
      const bool failed = target.failed() || n.node.status == distsys::NodeStatus::kRemoved;
      const bool blocked = failed || !target.serving();
      const double health = failed ? 0.0 : target.rate(cfg_.workload) / target.baseline_throughput();
      scheduler_->set_health(n.node.id, health, blocked);
    }
    scheduler_->drain_queue(t);
    place_from_log(t);
  }

  void on_vm_progress(long long k) {
    const double t = tick_time(k);
    const auto exc = excitation(tick_time(k - 1));
    for (auto& vm : vms_) {
      const auto state = vm.vm.state;
      if (!vm.host || state == distsys::VmState::kDone || state == distsys::VmState::kFailed ||
          state == distsys::VmState::kBlocked) {
        continue;
      }
      const double dt = t - vm.last_update;
      vm.last_update = t;
      if (dt <= 0.0) continue;
      auto& host = nodes_[*vm.host];
      const auto& target = *host.target;
      const std::string subject = fmt::format("vm/{}", vm.vm.id);
      if (distsys::uses_storage(state) && target.failed()) {
        vm.vm.transition(distsys::VmState::kBlocked, t);
        result_.events.log(t, EventKind::kVm, subject, "BLOCKED", "host=" + host.node.id);
        continue;
      }
      const double level =
          host.underwater() && exc.combined_factor > 0.0 ? host.perceived(exc.delta_spl) : 0.0;
      const auto backing = target.is_array() ? distsys::VmBacking::kRaid5 : distsys::VmBacking::kSingleDisk;
      if (state == distsys::VmState::kRunning && backing == distsys::VmBacking::kSingleDisk &&
          level >= cal_.vm.failure_db) {
        vm.vm.transition(distsys::VmState::kFailed, t);
        scheduler_->release(host.node.id);
        result_.events.log(t, EventKind::kVm, subject, "FAILED", "host=" + host.node.id);
        continue;
      }
      const bool stalled = distsys::uses_storage(state) && !target.serving();
      const double rate = stalled ? 0.0 : 1.0 / cal_.vm.factor(state, level);
      vm.remaining -= dt * rate;
      if (vm.remaining > 1e-9) continue;
      if (vm.stage + 1 < static_cast<int>(kVmStages.size())) {
        ++vm.stage;
        vm.vm.transition(kVmStages[static_cast<std::size_t>(vm.stage)], t);
        vm.remaining = vm.base[static_cast<std::size_t>(vm.stage)];
        result_.events.log(t, EventKind::kVm, subject,
                           std::string(distsys::to_string(vm.vm.state)), "host=" + host.node.id);
      } else {
        vm.vm.transition(distsys::VmState::kDone, t);
        scheduler_->release(host.node.id);
        result_.events.log(t, EventKind::kVm, subject, "DONE", "host=" + host.node.id);
      }
    }
  }

  void on_sample(long long k) {
    const double t = tick_time(k);
    const auto exc = excitation(t);
    result_.metrics.record(t, "excitation_db", exc.delta_spl);
    for (auto& n : nodes_) {
      const auto& target = *n.target;
      double v = target.failed() ? 0.0 : target.rate(cfg_.workload);
      if (noise_sigma_ > 0.0 && v > 0.0) v = std::max(0.0, v * (1.0 + n.noise->normal(0.0, noise_sigma_)));
      const std::string tag = "node=" + n.node.id;
      result_.metrics.record(t, "throughput_mb_s", v, tag);
      result_.metrics.record(t, "node_status", status_code(n.node.status), tag);
      const auto& states = target.states();
      for (std::size_t i = 0; i < states.size(); ++i) {
        const bool active = !target.array() || target.array()->is_active(i);
        const double m = active && states[i].responsive ? states[i].current_multiplier : 0.0;
        result_.metrics.record(t, "disk_multiplier", m, tag + ";disk=" + target.models()[i].name);
      }
    }
    if (scheduler_) {
      for (const auto& h : scheduler_->hosts()) {
        result_.metrics.record(t, "vm_active", h.active_vms, "host=" + h.id);
      }
    }

    const long long next = k + 1;
    const double tn = tick_time(next);
    if (tn > cfg_.horizon_s + 1e-9) return;
    queue_.schedule(tn, EventKind::kDiskState, [this, next] { on_storage(next); });
    queue_.schedule(tn, EventKind::kNode, [this, next] { on_nodes(next); });
    if (cfg_.vms) queue_.schedule(tn, EventKind::kVm, [this, next] { on_vm_progress(next); });
    queue_.schedule(tn, EventKind::kSampleTick, [this, next] { on_sample(next); });
  }

  void summarize() {
    auto& s = result_.summary;
    s.set("scenario", cfg_.name);
    s.set("seed", static_cast<long long>(cfg_.seed));
    s.set("horizon_s", cfg_.horizon_s);
    s.set("source_spl", source_.amplitude_spl);
    for (const auto& n : nodes_) {
      const std::string p = "node." + n.node.id;
      s.set(p + ".status", std::string(distsys::to_string(n.node.status)));
      if (const auto* a = n.target->array()) {
        s.set(p + ".array", std::string(storage::to_string(a->status())));
        s.set(p + ".active_disks", static_cast<long long>(a->active_count()));
      }
    }
    if (replicas_) {
      s.set("replicas.added", static_cast<long long>(replicas_added_));
      s.set("replicas.under_replicated", static_cast<long long>(under_replicated_));
    }
    if (scheduler_) {
      for (const auto& [host, count] : scheduler_->assigned_counts()) {
        s.set("vm.assigned." + host, static_cast<long long>(count));
      }
      s.set("vm.queued", static_cast<long long>(scheduler_->queue().size()));
      std::map<std::string, long long> states;
      for (const auto& vm : vms_) ++states[std::string(distsys::to_string(vm.vm.state))];
      for (const auto& [st, count] : states) s.set("vm.final." + st, count);
      for (const auto& n : nodes_) {
        long long unfinished = 0;
        long long blocked = 0;
        for (const auto& vm : vms_) {
          if (!vm.vm.host || *vm.vm.host != n.node.id) continue;
          if (vm.vm.state != distsys::VmState::kDone) ++unfinished;
          if (vm.vm.state == distsys::VmState::kBlocked) ++blocked;
        }
        s.set("vm.unfinished." + n.node.id, unfinished);
        s.set("vm.blocked." + n.node.id, blocked);
      }
    }
  }

  const ScenarioConfig& cfg_;
  const Calibration& cal_;
  acoustics::ExcitationContext ctx_;
  acoustics::AcousticSource source_;
  double distance_ = 0.0;
  double position_factor_ = 1.0;
  double noise_sigma_ = 0.0;
  std::vector<NodeRuntime> nodes_;
  std::optional<distsys::ReplicaMap> replicas_;
  int replicas_added_ = 0;
  int under_replicated_ = 0;
  std::optional<distsys::Scheduler> scheduler_;
  std::vector<VmRuntime> vms_;
  std::size_t applied_log_ = 0;
  EventQueue queue_;
  RunResult result_;
};

}  // namespace

RunResult run(const ScenarioConfig& config, const Calibration& calibration) {
  config.validate(calibration);
  Simulation sim(config, calibration);
  return sim.run();
}

}  // namespace udc::engine
