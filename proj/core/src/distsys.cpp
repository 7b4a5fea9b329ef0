#include "udcsim/distsys.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "udcsim/error.hpp"

namespace udc::distsys {

std::string_view to_string(NodeLocation l) noexcept {
  return l == NodeLocation::kUnderwater ? "underwater" : "on_land";
}

std::string_view to_string(NodeStatus s) noexcept {
  switch (s) {
    case NodeStatus::kLive: return "live";
    case NodeStatus::kBlocked: return "blocked";
    case NodeStatus::kRemoved: return "removed";
  }
  return "unknown";
}

std::vector<NodeEvent> dfs_step(Node& node, const StorageView& storage, double dt) {
  std::vector<NodeEvent> events;
  if (node.status == NodeStatus::kRemoved) return events;
  node.since_heartbeat_s += dt;
  if (node.since_heartbeat_s + 1e-9 < node.heartbeat_interval_s) return events;
  node.since_heartbeat_s = 0.0;

  NodeStatus next = node.status;
  if (storage.failed) {
    next = NodeStatus::kRemoved;
  } else if (!storage.serving) {
    next = NodeStatus::kBlocked;
  } else {
    next = NodeStatus::kLive;
  }
  if (next != node.status) {
    events.push_back({node.status, next});
    node.status = next;
  }
  return events;
}

void DbCluster::validate() const {
  if (latency_model.find(underwater_node_count) == latency_model.end()) {
    throw ConfigError(fmt::format("db cluster: no latency table for {} underwater nodes",
                                  underwater_node_count));
  }
  for (const auto& [count, table] : latency_model) {
    if (count < 0 || count > total_nodes) {
      throw ConfigError(fmt::format("db cluster: latency table for {} nodes exceeds cluster size", count));
    }
    if (!table.non_decreasing()) {
      throw ConfigError(fmt::format("db cluster: latency table for {} nodes must be non-decreasing", count));
    }
    if (table(0.0) < 1.0) {
      throw ConfigError(fmt::format("db cluster: latency for {} nodes below 1 at 0 dB", count));
    }
  }
}

std::optional<double> db_normalized_latency(const DbCluster& cluster, double delta_spl) {
  if (delta_spl < 0.0) throw ValidationError("db_normalized_latency: level must be >= 0");
  auto it = cluster.latency_model.find(cluster.underwater_node_count);
  if (it == cluster.latency_model.end()) {
    throw ConfigError(fmt::format("db cluster: no latency table for {} underwater nodes",
                                  cluster.underwater_node_count));
  }
  if (delta_spl > cluster.out_of_service_above_db) return std::nullopt;
  return std::max(1.0, it->second(delta_spl));
}

std::string_view to_string(VmState s) noexcept {
  switch (s) {
    case VmState::kInit: return "INIT";
    case VmState::kProlog: return "PROLOG";
    case VmState::kBoot: return "BOOT";
    case VmState::kRunning: return "RUNNING";
    case VmState::kDone: return "DONE";
    case VmState::kFailed: return "FAILED";
    case VmState::kBlocked: return "BLOCKED";
  }
  return "unknown";
}

bool is_legal_transition(VmState from, VmState to) noexcept {
  switch (from) {
    case VmState::kInit: return to == VmState::kProlog;
    case VmState::kProlog: return to == VmState::kBoot || to == VmState::kBlocked;
    case VmState::kBoot: return to == VmState::kRunning;
    case VmState::kRunning:
      return to == VmState::kDone || to == VmState::kFailed || to == VmState::kBlocked;
    case VmState::kDone:
    case VmState::kFailed:
    case VmState::kBlocked: return false;
  }
  return false;
}

bool uses_storage(VmState s) noexcept { return s == VmState::kProlog || s == VmState::kRunning; }

void VirtualMachine::transition(VmState to, double t) {
  if (!is_legal_transition(state, to)) {
    throw ValidationError(fmt::format("vm {}: illegal transition {} -> {}", id, to_string(state),
                                      to_string(to)));
  }
  state = to;
  entered_at[to] = t;
}

double VmInflationModel::factor(VmState state, double delta_spl) const {
  double max_factor = 1.0;
  if (state == VmState::kProlog) max_factor = prolog_max_factor;
  else if (state == VmState::kRunning) max_factor = running_max_factor;
  else return 1.0;
  if (delta_spl <= onset_db) return 1.0;
  const double span = max_pre_failure_db - onset_db;
  const double w = span > 0.0 ? std::min(1.0, (delta_spl - onset_db) / span) : 1.0;
  return 1.0 + w * (max_factor - 1.0);
}

VmDuration vm_state_duration(VmState state, double base_duration_s, double delta_spl,
                             const VmInflationModel& model, VmBacking backing) {
  if (!(base_duration_s > 0.0)) throw ValidationError("vm_state_duration: base duration must be > 0");
  VmDuration out;
  if (state == VmState::kRunning && backing == VmBacking::kSingleDisk &&
      delta_spl >= model.failure_db) {
    out.failed = true;
    return out;
  }
  out.seconds = base_duration_s * model.factor(state, delta_spl);
  return out;
}

Scheduler::Scheduler(std::vector<Host> hosts) : hosts_(std::move(hosts)) {
  if (hosts_.empty()) throw ConfigError("scheduler: no hosts");
  std::set<std::string> ids;
  for (const auto& h : hosts_) {
    if (!ids.insert(h.id).second) throw ConfigError("scheduler: duplicate host " + h.id);
    if (h.capacity <= 0.0) throw ConfigError("scheduler: host " + h.id + " capacity must be > 0");
  }
}

Host& Scheduler::host(const std::string& id) {
  for (auto& h : hosts_) {
    if (h.id == id) return h;
  }
  throw ValidationError("scheduler: unknown host " + id);
}

const Host& Scheduler::host(const std::string& id) const {
  return const_cast<Scheduler*>(this)->host(id);
}

void Scheduler::set_health(const std::string& id, double health, bool blocked) {
  Host& h = host(id);
  h.health = std::clamp(health, 0.0, 1.0);
  h.blocked = blocked;
}

void Scheduler::release(const std::string& id) {
  Host& h = host(id);
  if (h.active_vms > 0) --h.active_vms;
}

std::optional<std::size_t> Scheduler::pick() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < hosts_.size(); ++i) {
    const Host& h = hosts_[i];
    if (h.blocked || h.available() <= 0.0) continue;
    if (!best || h.available() > hosts_[*best].available()) best = i;
  }
  return best;
}

Assignment Scheduler::submit(int vm, double t) {
  Assignment a{t, vm, std::nullopt};
  if (auto idx = queue_.empty() ? pick() : std::nullopt) {
    ++hosts_[*idx].active_vms;
    a.host = hosts_[*idx].id;
  } else {
    queue_.push_back(vm);
  }
  log_.push_back(a);
  return a;
}

std::vector<Assignment> Scheduler::drain_queue(double t) {
  std::vector<Assignment> placed;
  while (!queue_.empty()) {
    auto idx = pick();
    if (!idx) break;
    ++hosts_[*idx].active_vms;
    Assignment a{t, queue_.front(), hosts_[*idx].id};
    queue_.erase(queue_.begin());
    log_.push_back(a);
    placed.push_back(a);
  }
  return placed;
}

std::map<std::string, int> Scheduler::assigned_counts() const {
  std::map<std::string, int> counts;
  for (const auto& h : hosts_) counts[h.id] = 0;
  for (const auto& a : log_) {
    if (a.host) ++counts[*a.host];
  }
  return counts;
}

std::vector<Assignment> schedule_vms(Scheduler& scheduler, const std::vector<VmRequest>& batch,
                                     const HostHealthFeed& feed) {
  std::vector<VmRequest> ordered = batch;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const VmRequest& a, const VmRequest& b) { return a.time < b.time; });
  std::vector<Assignment> out;
  for (const auto& req : ordered) {
    for (const auto& h : scheduler.hosts()) {
      const HostHealth hh = feed(h.id, req.time);
      scheduler.set_health(h.id, hh.health, hh.blocked);
    }
    auto drained = scheduler.drain_queue(req.time);
    out.insert(out.end(), drained.begin(), drained.end());
    out.push_back(scheduler.submit(req.vm, req.time));
  }
  return out;
}

ReplicaMap ReplicaMap::round_robin(int blocks, const std::vector<std::string>& nodes, int factor) {
  if (factor < 1 || static_cast<std::size_t>(factor) > nodes.size()) {
    throw ConfigError("replica map: replication factor must lie in [1, node count]");
  }
  ReplicaMap map;
  map.replication_factor = factor;
  for (int b = 0; b < blocks; ++b) {
    for (int r = 0; r < factor; ++r) {
      map.replicas[b].insert(nodes[(static_cast<std::size_t>(b) + r) % nodes.size()]);
    }
  }
  return map;
}

std::map<std::string, int> ReplicaMap::load() const {
  std::map<std::string, int> out;
  for (const auto& [block, nodes] : replicas) {
    for (const auto& n : nodes) ++out[n];
  }
  return out;
}

RereplicationResult rereplicate(const ReplicaMap& map, const std::string& removed_node,
                                const std::vector<std::string>& healthy_nodes,
                                const std::set<std::string>& affected) {
  if (map.replication_factor < 2) {
    throw ValidationError("rereplicate: replication factor must be >= 2");
  }
  RereplicationResult result{map, {}};
  auto load = result.map.load();
  load.erase(removed_node);

  std::vector<std::string> candidates;
  for (const auto& n : healthy_nodes) {
    if (n != removed_node && !affected.count(n)) candidates.push_back(n);
  }

  for (auto& [block, nodes] : result.map.replicas) {
    if (!nodes.erase(removed_node)) continue;
    while (static_cast<int>(nodes.size()) < result.map.replication_factor) {
      const std::string* target = nullptr;
      for (const auto& c : candidates) {
        if (nodes.count(c)) continue;
        if (!target || load[c] < load[*target]) target = &c;
      }
      if (!target) {
        result.events.push_back({MigrationEvent::Kind::kUnderReplicated, block, {}});
        break;
      }
      nodes.insert(*target);
      ++load[*target];
      result.events.push_back({MigrationEvent::Kind::kReplicaAdded, block, *target});
    }
  }
  return result;
}

}  // namespace udc::distsys
