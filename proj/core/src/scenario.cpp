#include "udcsim/engine/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "udcsim/error.hpp"

namespace udc::engine {

using nlohmann::json;

std::vector<std::string> ScenarioConfig::problems(const Calibration& cal) const {
  std::vector<std::string> out;
  auto need = [&](bool ok, std::string msg) {
    if (!ok) out.push_back(std::move(msg));
  };

  need(horizon_s > 0.0, "horizon_s must be > 0");
  need(tick_s > 0.0, "tick_s must be > 0");
  need(tick_s <= horizon_s || horizon_s <= 0.0, "tick_s must not exceed horizon_s");
  need(heartbeat_s > 0.0, "heartbeat_s must be > 0");
  if (noise_sigma) need(*noise_sigma >= 0.0, "noise_sigma must be >= 0");

  const bool has_delta = source.delta_spl.has_value();
  const bool has_amp = source.amplitude_spl.has_value();
  need(has_delta != has_amp, "source: give exactly one of delta_spl and amplitude_spl");
  if (has_amp) need(*source.amplitude_spl >= 0.0, "source: amplitude_spl must be >= 0");
  need(source.frequency_hz > 0.0, "source: frequency_hz must be > 0");
  need(source.orientation_deg >= 0.0 && source.orientation_deg <= 180.0,
       "source: orientation_deg must lie in [0, 180]");
  if (source.distance_m) need(*source.distance_m >= 0.0, "source: distance_m must be >= 0");
  need(cal.position_factors.count(source.position) == 1,
       fmt::format("source: injection location {} has no calibrated position factor", source.position));

  need(!nodes.empty(), "topology: at least one node required");
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    const std::string who = n.id.empty() ? std::string("<unnamed>") : n.id;
    need(!n.id.empty(), "topology: node id must not be empty");
    need(n.id.find_first_of(",/;=\n") == std::string::npos,
         fmt::format("node {}: id must not contain , / ; = or newlines", who));
    need(ids.insert(n.id).second, fmt::format("topology: duplicate node id {}", who));
    need(n.vm_capacity > 0.0, fmt::format("node {}: vm_capacity must be > 0", who));
    const auto& s = n.storage;
    if (s.type == StorageType::kRaid5) {
      need(s.disks.size() >= 3, fmt::format("node {}: RAID 5 needs at least 3 disks", who));
    } else {
      need(s.disks.size() == 1, fmt::format("node {}: single-disk storage needs exactly 1 disk", who));
    }
    if (s.drop_timeout_s) need(*s.drop_timeout_s >= 0.0, fmt::format("node {}: drop_timeout_s must be >= 0", who));
    if (s.degraded_drop_timeout_s) {
      need(*s.degraded_drop_timeout_s >= 0.0, fmt::format("node {}: degraded_drop_timeout_s must be >= 0", who));
    }
    std::set<std::string> disk_names;
    for (const auto& d : s.disks) {
      const std::string dn = fmt::format("node {} disk {}", who, d.name.empty() ? "<unnamed>" : d.name);
      need(!d.name.empty(), fmt::format("node {}: disk name must not be empty", who));
      need(disk_names.insert(d.name).second, fmt::format("{}: duplicate disk name", dn));
      need(d.sensitivity_offset_db >= 0.0, fmt::format("{}: sensitivity_offset_db must be >= 0", dn));
      if (d.dwell_s) need(*d.dwell_s >= 0.0, fmt::format("{}: dwell_s must be >= 0", dn));
      if (d.permanent_damage_rate) {
        need(*d.permanent_damage_rate >= 0.0, fmt::format("{}: permanent_damage_rate must be >= 0", dn));
      }
      if (d.baseline_throughput) {
        need(*d.baseline_throughput > 0.0, fmt::format("{}: baseline_throughput must be > 0", dn));
      }
    }
  }

  if (vms) {
    need(vms->count >= 0, "vms: count must be >= 0");
    need(vms->interval_s > 0.0, "vms: interval_s must be > 0");
    need(vms->init_s > 0.0 && vms->prolog_s > 0.0 && vms->boot_s > 0.0 && vms->running_s > 0.0,
         "vms: state durations must be > 0");
    need(vms->duration_jitter >= 0.0 && vms->duration_jitter < 1.0, "vms: duration_jitter must lie in [0, 1)");
    need(vms->monitor_interval_s > 0.0, "vms: monitor_interval_s must be > 0");
  }
  need(replication.blocks >= 0, "replication: blocks must be >= 0");
  if (replication.blocks > 0) {
    need(replication.factor >= 2 && static_cast<std::size_t>(replication.factor) <= nodes.size(),
         "replication: factor must lie in [2, node count]");
  }
  return out;
}

void ScenarioConfig::validate(const Calibration& cal) const {
  auto p = problems(cal);
  if (!p.empty()) throw ConfigErrors(std::move(p));
}

namespace {

// Reads fields while recording, rather than throwing on, type errors.
class Fields {
 public:
  Fields(std::vector<std::string>& problems, std::string where)
      : problems_(problems), where_(std::move(where)) {}

  template <typename T>
  void get(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      bad(key);
    }
  }

  template <typename T>
  void get(const json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      bad(key);
    }
  }

  void bad(const std::string& key, const std::string& why = "wrong type") {
    problems_.push_back(fmt::format("{}.{}: {}", where_, key, why));
  }

  void unknown_keys(const json& j, std::initializer_list<const char*> known) {
    if (!j.is_object()) return;
    for (const auto& [k, v] : j.items()) {
      bool found = false;
      for (const char* n : known) found = found || k == n;
      if (!found) problems_.push_back(fmt::format("{}: unknown key '{}'", where_, k));
    }
  }

  std::vector<std::string>& problems() { return problems_; }

 private:
  std::vector<std::string>& problems_;
  std::string where_;
};

acoustics::VolumeSchedule read_schedule(const json& j, std::vector<std::string>& problems) {
  try {
    if (j.contains("staircase")) {
      const auto& s = j.at("staircase");
      std::optional<double> stop;
      if (s.contains("stop_s") && !s.at("stop_s").is_null()) stop = s.at("stop_s").get<double>();
      auto sched = acoustics::VolumeSchedule::staircase(s.at("step_db").get<double>(),
                                                        s.at("period_s").get<double>(),
                                                        s.at("steps").get<int>(), stop);
      if (s.contains("start_s") && s.at("start_s").get<double>() > 0.0) {
        std::vector<acoustics::ScheduleStep> steps{{0.0, 0.0, false}};
        const double start = s.at("start_s").get<double>();
        for (auto st : sched.steps()) {
          st.start_s += start;
          steps.push_back(st);
        }
        return acoustics::VolumeSchedule(std::move(steps));
      }
      return sched;
    }
    if (j.contains("steps")) {
      std::vector<acoustics::ScheduleStep> steps;
      for (const auto& s : j.at("steps")) {
        steps.push_back({s.at("start_s").get<double>(), s.value("offset_db", 0.0), s.value("active", true)});
      }
      return acoustics::VolumeSchedule(std::move(steps));
    }
    problems.push_back("source.schedule: expected 'steps' or 'staircase'");
  } catch (const json::exception& e) {
    problems.push_back(fmt::format("source.schedule: {}", e.what()));
  } catch (const Error& e) {
    problems.push_back(fmt::format("source.schedule: {}", e.what()));
  }
  return {};
}

DiskSpec read_disk(const json& j, const std::string& where, std::vector<std::string>& problems) {
  DiskSpec d;
  Fields f(problems, where);
  f.unknown_keys(j, {"name", "kind", "sensitivity_offset_db", "threshold_db", "dwell_s",
                     "permanent_damage_rate", "baseline_throughput"});
  f.get(j, "name", d.name);
  std::string kind = "hdd";
  f.get(j, "kind", kind);
  if (kind == "ssd") {
    d.kind = storage::DiskKind::kSolidState;
  } else if (kind != "hdd") {
    f.bad("kind", "expected 'hdd' or 'ssd'");
  }
  f.get(j, "sensitivity_offset_db", d.sensitivity_offset_db);
  f.get(j, "threshold_db", d.threshold_db);
  f.get(j, "dwell_s", d.dwell_s);
  f.get(j, "permanent_damage_rate", d.permanent_damage_rate);
  f.get(j, "baseline_throughput", d.baseline_throughput);
  return d;
}

NodeSpec read_node(const json& j, std::size_t index, std::vector<std::string>& problems) {
  NodeSpec n;
  const std::string where = fmt::format("topology.nodes[{}]", index);
  Fields f(problems, where);
  f.unknown_keys(j, {"id", "location", "storage", "vm_capacity"});
  f.get(j, "id", n.id);
  std::string loc = "on_land";
  f.get(j, "location", loc);
  if (loc == "underwater") {
    n.location = distsys::NodeLocation::kUnderwater;
  } else if (loc != "on_land") {
    f.bad("location", "expected 'underwater' or 'on_land'");
  }
  f.get(j, "vm_capacity", n.vm_capacity);
  if (!j.contains("storage")) {
    problems.push_back(where + ".storage: missing");
    return n;
  }
  const auto& s = j.at("storage");
  Fields fs(problems, where + ".storage");
  fs.unknown_keys(s, {"type", "disks", "drop_timeout_s", "degraded_drop_timeout_s"});
  std::string type = "raid5";
  fs.get(s, "type", type);
  if (type == "single") {
    n.storage.type = StorageType::kSingleDisk;
  } else if (type != "raid5") {
    fs.bad("type", "expected 'raid5' or 'single'");
  }
  fs.get(s, "drop_timeout_s", n.storage.drop_timeout_s);
  fs.get(s, "degraded_drop_timeout_s", n.storage.degraded_drop_timeout_s);
  if (s.contains("disks") && s.at("disks").is_array()) {
    std::size_t k = 0;
    for (const auto& d : s.at("disks")) {
      n.storage.disks.push_back(read_disk(d, fmt::format("{}.storage.disks[{}]", where, k++), problems));
    }
  } else {
    problems.push_back(where + ".storage.disks: missing or not an array");
  }
  return n;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir,
                              const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", origin, e.what()));
  }
  if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");

  std::vector<std::string> problems;
  ScenarioConfig c;
  Fields f(problems, "scenario");
  f.unknown_keys(root, {"name", "calibration", "seed", "horizon_s", "tick_s", "environment", "source",
                        "topology", "workload", "noise_sigma", "vms", "replication", "description"});
  f.get(root, "name", c.name);
  std::optional<std::string> cal;
  f.get(root, "calibration", cal);
  if (cal) {
    std::filesystem::path p(*cal);
    c.calibration = p.is_relative() ? base_dir / p : p;
  }
  f.get(root, "seed", c.seed);
  f.get(root, "horizon_s", c.horizon_s);
  f.get(root, "tick_s", c.tick_s);
  f.get(root, "noise_sigma", c.noise_sigma);
  std::string env = "lab";
  f.get(root, "environment", env);
  if (auto e = parse_environment(env)) {
    c.environment = *e;
  } else {
    f.bad("environment", "expected 'lab' or 'open_water'");
  }
  std::string wl = "sequential-write";
  f.get(root, "workload", wl);
  if (auto k = parse_workload_kind(wl)) {
    c.workload = *k;
  } else {
    f.bad("workload", "unknown workload kind '" + wl + "'");
  }

  if (root.contains("source")) {
    const auto& s = root.at("source");
    Fields fs(problems, "source");
    fs.unknown_keys(s, {"delta_spl", "amplitude_spl", "frequency_hz", "orientation_deg", "distance_m",
                        "position", "schedule"});
    fs.get(s, "delta_spl", c.source.delta_spl);
    fs.get(s, "amplitude_spl", c.source.amplitude_spl);
    fs.get(s, "frequency_hz", c.source.frequency_hz);
    fs.get(s, "orientation_deg", c.source.orientation_deg);
    fs.get(s, "distance_m", c.source.distance_m);
    fs.get(s, "position", c.source.position);
    if (s.contains("schedule")) c.source.schedule = read_schedule(s.at("schedule"), problems);
  } else {
    problems.push_back("source: missing");
  }

  if (root.contains("topology")) {
    const auto& t = root.at("topology");
    Fields ft(problems, "topology");
    ft.unknown_keys(t, {"nodes", "heartbeat_s"});
    ft.get(t, "heartbeat_s", c.heartbeat_s);
    if (t.contains("nodes") && t.at("nodes").is_array()) {
      std::size_t i = 0;
      for (const auto& n : t.at("nodes")) c.nodes.push_back(read_node(n, i++, problems));
    } else {
      problems.push_back("topology.nodes: missing or not an array");
    }
  } else {
    problems.push_back("topology: missing");
  }

  if (root.contains("vms")) {
    const auto& v = root.at("vms");
    VmWorkloadSpec spec;
    Fields fv(problems, "vms");
    fv.unknown_keys(v, {"count", "interval_s", "init_s", "prolog_s", "boot_s", "running_s",
                        "duration_jitter", "monitor_interval_s"});
    fv.get(v, "count", spec.count);
    fv.get(v, "interval_s", spec.interval_s);
    fv.get(v, "init_s", spec.init_s);
    fv.get(v, "prolog_s", spec.prolog_s);
    fv.get(v, "boot_s", spec.boot_s);
    fv.get(v, "running_s", spec.running_s);
    fv.get(v, "duration_jitter", spec.duration_jitter);
    fv.get(v, "monitor_interval_s", spec.monitor_interval_s);
    c.vms = spec;
  }
  if (root.contains("replication")) {
    const auto& r = root.at("replication");
    Fields fr(problems, "replication");
    fr.unknown_keys(r, {"blocks", "factor"});
    fr.get(r, "blocks", c.replication.blocks);
    fr.get(r, "factor", c.replication.factor);
  }

  if (c.calibration && !std::filesystem::exists(*c.calibration)) {
    problems.push_back("calibration: file not found: " + c.calibration->string());
  }
  if (!problems.empty()) {
    for (auto& p : problems) p = origin + ": " + p;
    throw ConfigErrors(std::move(problems));
  }
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read scenario " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.parent_path(), path.string());
}

}  // namespace udc::engine
