#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "udcsim/interp.hpp"

namespace udc::distsys {

enum class NodeLocation { kUnderwater, kOnLand };
enum class NodeStatus { kLive, kBlocked, kRemoved };

std::string_view to_string(NodeLocation l) noexcept;
std::string_view to_string(NodeStatus s) noexcept;

// What the data node sees of its local storage on a heartbeat.
struct StorageView {
  bool serving = true;  // no active member stalled
  bool failed = false;  // array lost
};

struct Node {
  std::string id;
  NodeLocation location = NodeLocation::kOnLand;
  NodeStatus status = NodeStatus::kLive;
  double heartbeat_interval_s = 3.0;
  double since_heartbeat_s = 0.0;
};

struct NodeEvent {
  NodeStatus from;
  NodeStatus to;
};

// Advances the heartbeat clock; on a heartbeat the node status follows the
// storage: blocked while stalled, live once service resumes, removed once
// the array fails. Removed is absorbing.
std::vector<NodeEvent> dfs_step(Node& node, const StorageView& storage, double dt);

struct DbCluster {
  int total_nodes = 10;
  int underwater_node_count = 3;
  // underwater node count -> normalized latency vs level above noise
  std::map<int, PiecewiseLinear> latency_model;
  double out_of_service_above_db = 38.0;

  void validate() const;
};

// nullopt: the underwater nodes are out of service (benchmark abort).
std::optional<double> db_normalized_latency(const DbCluster& cluster, double delta_spl);

enum class VmState { kInit, kProlog, kBoot, kRunning, kDone, kFailed, kBlocked };
std::string_view to_string(VmState s) noexcept;

bool is_legal_transition(VmState from, VmState to) noexcept;
bool uses_storage(VmState s) noexcept;

struct VirtualMachine {
  int id = 0;
  VmState state = VmState::kInit;
  std::optional<std::string> host;
  std::map<VmState, double> entered_at;

  // Throws ValidationError on an illegal transition.
  void transition(VmState to, double t);
};

enum class VmBacking { kSingleDisk, kRaid5 };

struct VmInflationModel {
  double onset_db = 26.0;
  double max_pre_failure_db = 34.0;
  double prolog_max_factor = 1.10;
  double running_max_factor = 3.80;
  double failure_db = 36.0;  // single-disk backing only

  double factor(VmState state, double delta_spl) const;
};

struct VmDuration {
  double seconds = 0.0;
  bool failed = false;
};

VmDuration vm_state_duration(VmState state, double base_duration_s, double delta_spl,
                             const VmInflationModel& model = {},
                             VmBacking backing = VmBacking::kSingleDisk);

struct Host {
  std::string id;
  double capacity = 8.0;  // concurrent VM slots at full storage health
  double health = 1.0;    // advertised storage throughput fraction
  bool blocked = false;   // storage stalled or failed: excluded from placement
  int active_vms = 0;

  double available() const noexcept { return capacity * health - active_vms; }
};

struct Assignment {
  double time = 0.0;
  int vm = 0;
  std::optional<std::string> host;  // nullopt: queued
};

// Greedy capacity-proportional placement: each VM goes to the eligible
// host with the largest available effective capacity (ties: host order).
class Scheduler {
 public:
  explicit Scheduler(std::vector<Host> hosts);

  const std::vector<Host>& hosts() const noexcept { return hosts_; }
  Host& host(const std::string& id);
  const Host& host(const std::string& id) const;

  void set_health(const std::string& id, double health, bool blocked);
  void release(const std::string& id);

  // Places `vm` or queues it; the returned record is also logged.
  Assignment submit(int vm, double t);

  // Retries queued VMs in FIFO order; returns the placements made.
  std::vector<Assignment> drain_queue(double t);

  const std::vector<int>& queue() const noexcept { return queue_; }
  const std::vector<Assignment>& log() const noexcept { return log_; }

  std::map<std::string, int> assigned_counts() const;

 private:
  std::optional<std::size_t> pick() const;

  std::vector<Host> hosts_;
  std::vector<int> queue_;
  std::vector<Assignment> log_;
};

struct HostHealth {
  double health = 1.0;
  bool blocked = false;
};

using HostHealthFeed = std::function<HostHealth(const std::string& host, double t)>;

struct VmRequest {
  int vm = 0;
  double time = 0.0;
};

// Batch placement in instantiation order with the feed applied before each
// placement. VMs stay resident; callers model departures via release().
std::vector<Assignment> schedule_vms(Scheduler& scheduler, const std::vector<VmRequest>& batch,
                                     const HostHealthFeed& feed);

struct ReplicaMap {
  std::map<int, std::set<std::string>> replicas;  // block -> nodes
  int replication_factor = 2;

  static ReplicaMap round_robin(int blocks, const std::vector<std::string>& nodes, int factor);
  std::map<std::string, int> load() const;
};

struct MigrationEvent {
  enum class Kind { kReplicaAdded, kUnderReplicated } kind;
  int block = 0;
  std::string node;  // target for additions
};

struct RereplicationResult {
  ReplicaMap map;
  std::vector<MigrationEvent> events;
};

// Removes `removed_node` and restores the replication factor on healthy
// nodes outside `affected` (the detector-flagged set).
RereplicationResult rereplicate(const ReplicaMap& map, const std::string& removed_node,
                                const std::vector<std::string>& healthy_nodes,
                                const std::set<std::string>& affected = {});

}  // namespace udc::distsys
