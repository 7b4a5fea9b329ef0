#include "udcsim/calibration.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "udcsim/error.hpp"

namespace udc {

using nlohmann::json;

std::string_view to_string(Environment e) noexcept {
  return e == Environment::kLab ? "lab" : "open_water";
}

std::optional<Environment> parse_environment(std::string_view text) noexcept {
  if (text == "lab") return Environment::kLab;
  if (text == "open_water" || text == "open-water") return Environment::kOpenWater;
  return std::nullopt;
}

double Calibration::position_factor(int location) const {
  auto it = position_factors.find(location);
  if (it == position_factors.end()) {
    throw ConfigError(fmt::format("calibration: no position factor for injection location {}", location));
  }
  return it->second;
}

acoustics::ExcitationContext Calibration::excitation_context(Environment e, bool empirical_loss) const {
  const auto& env = environment(e);
  acoustics::ExcitationContext ctx;
  ctx.medium = env.medium;
  ctx.resonance = resonance;
  ctx.angle_table = acoustics::make_angle_table(angle_table);
  ctx.displacement = displacement;
  if (empirical_loss) ctx.empirical_loss.emplace(env.spl_distance);
  return ctx;
}

void Calibration::validate() const {
  std::vector<std::string> problems;
  auto check = [&](const char* what, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      problems.push_back(fmt::format("{}: {}", what, e.what()));
    }
  };
  check("media.lab", [&] { lab.medium.validate(); });
  check("media.open_water", [&] { open_water.medium.validate(); });
  check("spl_distance.lab", [&] { acoustics::SplCurve{lab.spl_distance}; });
  check("spl_distance.open_water", [&] { acoustics::SplCurve{open_water.spl_distance}; });
  check("resonance", [&] { resonance.validate(); });
  check("angle_table", [&] { acoustics::make_angle_table(angle_table); });
  check("pes", [&] { PiecewiseLinear(pes_curve, "PES curve"); });
  check("cache", [&] { cache.validate(); });
  check("db_latency", [&] { db.validate(); });
  if (position_factors.empty()) problems.push_back("position_factors: empty");
  for (const auto& [loc, f] : position_factors) {
    if (!(f > 0.0 && f <= 1.0)) {
      problems.push_back(fmt::format("position_factors: factor for location {} outside (0, 1]", loc));
    }
  }
  if (disk.baseline_throughput <= 0.0) problems.push_back("disk: baseline_throughput must be > 0");
  if (disk.threshold_jitter_db < 0.0) problems.push_back("disk: threshold_jitter_db must be >= 0");
  if (disk.unresponsive_dwell_s < 0.0) problems.push_back("disk: unresponsive_dwell_s must be >= 0");
  if (disk.permanent_damage_rate < 0.0) problems.push_back("disk: permanent_damage_rate must be >= 0");
  if (raid.drop_timeout_s < 0.0 || raid.degraded_drop_timeout_s < 0.0) {
    problems.push_back("raid: timeouts must be >= 0");
  }
  if (noise_sigma_fraction < 0.0) problems.push_back("noise: sigma_fraction must be >= 0");
  if (displacement.displacement_nm < 0.0) problems.push_back("displacement: displacement_nm must be >= 0");
  if (vm.max_pre_failure_db < vm.onset_db) problems.push_back("vm_inflation: max_pre_failure_db below onset_db");
  if (!problems.empty()) throw ConfigErrors(std::move(problems));
}

Calibration default_calibration() {
  Calibration c;

  c.lab.medium.noise_floor_spl = 116.0;
  c.lab.medium.attenuation_coeff = 0.0;
  c.lab.reference_distance_m = 0.06;
  c.lab.spl_distance = {{0.06, 150.0}, {0.25, 148.0}, {0.5, 146.0}, {1.0, 143.0}, {2.0, 139.0}};
  c.lab.write_curve = storage::DegradationCurve({{26.0, 0.83}, {28.0, 0.6}, {30.0, 0.35}, {32.0, 0.0}});

  c.open_water.medium.noise_floor_spl = 114.0;
  c.open_water.medium.attenuation_coeff = 0.0;
  c.open_water.reference_distance_m = 0.3;
  c.open_water.spl_distance = {{0.3, 160.0}, {1.0, 156.0}, {2.0, 153.0}, {4.0, 150.0}, {6.35, 148.0}};
  c.open_water.write_curve =
      storage::DegradationCurve({{28.0, 0.85}, {30.0, 0.7}, {32.0, 0.55}, {34.0, 0.39}, {36.0, 0.0}});

  c.resonance.bands = {{2000.0, 50.0, 0.6}, {3700.0, 50.0, 0.5}, {5200.0, 100.0, 1.0}, {8900.0, 50.0, 0.4}};
  c.resonance.off_band_gain = 0.0;

  c.angle_table = {{0.0, 1.0}, {45.0, 0.68}, {90.0, 0.66}};
  c.position_factors = {{1, 1.0}, {2, 0.9}, {3, 0.75}, {4, 0.6}};
  c.pes_curve = {{46.0, 0.0}, {64.0, 83.0}};

  using storage::LatencyBand;
  using W = WorkloadKind;
  c.cache.cache_size_gb = 1.0;
  c.cache.policy = "write-back";
  const double sizes[] = {0.5, 1.0, 1.5, 2.0};
  const double sw[] = {0.333, 0.569, 0.686, 0.761};
  for (int i = 0; i < 4; ++i) {
    c.cache.hit_ratio_table[{W::kSequentialWrite, sizes[i]}] = sw[i];
    c.cache.hit_ratio_table[{W::kSequentialRead, sizes[i]}] = sw[i];
    c.cache.hit_ratio_table[{W::kRandomWrite, sizes[i]}] = 0.0;
    c.cache.hit_ratio_table[{W::kRandomRead, sizes[i]}] = 0.0;
  }
  c.cache.hit_latency_band = LatencyBand{1.0, 5.0};
  c.cache.miss_latency_band_benign = LatencyBand{1.0, 200.0};
  c.cache.miss_latency_band_attacked = LatencyBand{200.0, 800.0};

  c.db.total_nodes = 10;
  c.db.underwater_node_count = 3;
  c.db.out_of_service_above_db = 38.0;
  c.db.latency_model.emplace(3, PiecewiseLinear({{0.0, 1.0}, {20.0, 1.0}, {26.0, 1.10}, {28.0, 1.20},
                                                 {30.0, 1.30}, {32.0, 1.40}, {34.0, 1.50},
                                                 {36.0, 1.632}, {38.0, 1.927}}));
  c.db.latency_model.emplace(5, PiecewiseLinear({{0.0, 1.0}, {20.0, 1.0}, {26.0, 1.08}, {28.0, 1.16},
                                                 {30.0, 1.24}, {32.0, 1.33}, {34.0, 1.42},
                                                 {36.0, 1.60}, {38.0, 1.85}}));
  c.db.latency_model.emplace(7, PiecewiseLinear({{0.0, 1.0}, {20.0, 1.0}, {26.0, 1.07}, {28.0, 1.14},
                                                 {30.0, 1.22}, {32.0, 1.30}, {34.0, 1.40},
                                                 {36.0, 1.56}, {38.0, 1.80}}));

  c.figure_derived = {
      "spl_distance.lab",
      "spl_distance.open_water",
      "degradation.open_water_write",
      "degradation.lab_write (28 and 30 dB knots)",
      "resonance.bands (widths and gains)",
      "position_factors (locations 2-4)",
      "db_latency.tables (interior knots; all of 5 and 7)",
      "cache.hit_ratio (sequential-read and random-read rows)",
  };
  return c;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  template <typename Fn>
  void section(const json& root, const char* key, Fn&& fn) {
    if (!root.contains(key)) return;
    try {
      fn(root.at(key));
    } catch (const json::exception& e) {
      fail(key, e.what());
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  void fail(const std::string& where, const std::string& what) {
    problems_.push_back(fmt::format("{}: {}: {}", origin_, where, what));
  }

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::string origin_;
  std::vector<std::string> problems_;
};

std::vector<Knot> knots_from(const json& j) {
  std::vector<Knot> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw ConfigError("expected [x, y] pairs");
    out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  return out;
}

json knots_to(std::span<const Knot> knots) {
  json a = json::array();
  for (const auto& k : knots) a.push_back({k.x, k.y});
  return a;
}

void read_medium(const json& j, acoustics::Medium& m) {
  m.density = j.value("density", m.density);
  m.sound_speed = j.value("sound_speed", m.sound_speed);
  m.attenuation_coeff = j.value("attenuation_coeff", m.attenuation_coeff);
  m.noise_floor_spl = j.value("noise_floor_spl", m.noise_floor_spl);
  m.salinity_psu = j.value("salinity_psu", m.salinity_psu);
  m.temperature_c = j.value("temperature_c", m.temperature_c);
  m.validate();
}

json medium_to(const acoustics::Medium& m) {
  return {{"density", m.density},
          {"sound_speed", m.sound_speed},
          {"attenuation_coeff", m.attenuation_coeff},
          {"noise_floor_spl", m.noise_floor_spl},
          {"salinity_psu", m.salinity_psu},
          {"temperature_c", m.temperature_c}};
}

storage::LatencyBand band_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("latency band must be [lo_ms, hi_ms]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

Calibration parse_calibration(const std::string& json_text, const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", origin, e.what()));
  }
  if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");

  Calibration c = default_calibration();
  Reader r(origin);

  r.section(root, "media", [&](const json& j) {
    if (j.contains("lab")) read_medium(j.at("lab"), c.lab.medium);
    if (j.contains("open_water")) read_medium(j.at("open_water"), c.open_water.medium);
  });
  r.section(root, "spl_distance", [&](const json& j) {
    if (j.contains("lab")) c.lab.spl_distance = knots_from(j.at("lab"));
    if (j.contains("open_water")) c.open_water.spl_distance = knots_from(j.at("open_water"));
  });
  r.section(root, "reference_distance_m", [&](const json& j) {
    c.lab.reference_distance_m = j.value("lab", c.lab.reference_distance_m);
    c.open_water.reference_distance_m = j.value("open_water", c.open_water.reference_distance_m);
  });
  r.section(root, "degradation", [&](const json& j) {
    if (j.contains("lab_write")) c.lab.write_curve = storage::DegradationCurve(knots_from(j.at("lab_write")));
    if (j.contains("open_water_write")) {
      c.open_water.write_curve = storage::DegradationCurve(knots_from(j.at("open_water_write")));
    }
    if (j.contains("lab_read") && !j.at("lab_read").is_null()) {
      c.lab.read_curve = storage::DegradationCurve(knots_from(j.at("lab_read")));
    }
    if (j.contains("open_water_read") && !j.at("open_water_read").is_null()) {
      c.open_water.read_curve = storage::DegradationCurve(knots_from(j.at("open_water_read")));
    }
  });
  r.section(root, "resonance", [&](const json& j) {
    acoustics::ResonanceProfile p;
    for (const auto& b : j.at("bands")) {
      p.bands.push_back({b.at("center_hz").get<double>(), b.at("half_width_hz").get<double>(),
                         b.at("gain").get<double>()});
    }
    p.off_band_gain = j.value("off_band_gain", 0.0);
    p.validate();
    c.resonance = p;
  });
  r.section(root, "angle_table", [&](const json& j) {
    c.angle_table = knots_from(j);
    acoustics::make_angle_table(c.angle_table);
  });
  r.section(root, "position_factors", [&](const json& j) {
    c.position_factors.clear();
    for (const auto& [k, v] : j.items()) c.position_factors[std::stoi(k)] = v.get<double>();
  });
  r.section(root, "pes", [&](const json& j) {
    c.pes_curve = knots_from(j);
    PiecewiseLinear(c.pes_curve, "PES curve");
  });
  r.section(root, "displacement", [&](const json& j) {
    c.displacement.displacement_nm = j.value("displacement_nm", c.displacement.displacement_nm);
    c.displacement.spl_db = j.value("spl_db", c.displacement.spl_db);
  });
  r.section(root, "disk", [&](const json& j) {
    c.disk.baseline_throughput = j.value("baseline_throughput", c.disk.baseline_throughput);
    c.disk.unresponsive_threshold_db = j.value("unresponsive_threshold_db", c.disk.unresponsive_threshold_db);
    c.disk.threshold_jitter_db = j.value("threshold_jitter_db", c.disk.threshold_jitter_db);
    c.disk.unresponsive_dwell_s = j.value("unresponsive_dwell_s", c.disk.unresponsive_dwell_s);
    c.disk.permanent_damage_rate = j.value("permanent_damage_rate", c.disk.permanent_damage_rate);
  });
  r.section(root, "raid", [&](const json& j) {
    c.raid.drop_timeout_s = j.value("drop_timeout_s", c.raid.drop_timeout_s);
    c.raid.degraded_drop_timeout_s = j.value("degraded_drop_timeout_s", c.raid.degraded_drop_timeout_s);
  });
  r.section(root, "noise", [&](const json& j) {
    c.noise_sigma_fraction = j.value("sigma_fraction", c.noise_sigma_fraction);
  });
  r.section(root, "cache", [&](const json& j) {
    c.cache.policy = j.value("policy", c.cache.policy);
    if (j.contains("hit_ratio")) {
      c.cache.hit_ratio_table.clear();
      for (const auto& [kind_name, sizes] : j.at("hit_ratio").items()) {
        const auto kind = parse_workload_kind(kind_name);
        if (!kind) throw ConfigError("unknown workload kind '" + kind_name + "'");
        for (const auto& [size, p] : sizes.items()) {
          c.cache.hit_ratio_table[{*kind, std::stod(size)}] = p.get<double>();
        }
      }
    }
    if (j.contains("hit_latency_ms")) c.cache.hit_latency_band = band_from(j.at("hit_latency_ms"));
    if (j.contains("miss_latency_benign_ms")) {
      c.cache.miss_latency_band_benign = band_from(j.at("miss_latency_benign_ms"));
    }
    if (j.contains("miss_latency_attacked_ms")) {
      c.cache.miss_latency_band_attacked = band_from(j.at("miss_latency_attacked_ms"));
    }
    c.cache.validate();
  });
  r.section(root, "db_latency", [&](const json& j) {
    c.db.total_nodes = j.value("total_nodes", c.db.total_nodes);
    c.db.out_of_service_above_db = j.value("out_of_service_above_db", c.db.out_of_service_above_db);
    if (j.contains("tables")) {
      c.db.latency_model.clear();
      for (const auto& [count, table] : j.at("tables").items()) {
        c.db.latency_model.emplace(std::stoi(count),
                                   PiecewiseLinear(knots_from(table), "db latency table " + count));
      }
    }
    c.db.validate();
  });
  r.section(root, "vm_inflation", [&](const json& j) {
    c.vm.onset_db = j.value("onset_db", c.vm.onset_db);
    c.vm.max_pre_failure_db = j.value("max_pre_failure_db", c.vm.max_pre_failure_db);
    c.vm.prolog_max_factor = j.value("prolog_max_factor", c.vm.prolog_max_factor);
    c.vm.running_max_factor = j.value("running_max_factor", c.vm.running_max_factor);
    c.vm.failure_db = j.value("failure_db", c.vm.failure_db);
  });
  r.section(root, "figure_derived", [&](const json& j) {
    c.figure_derived = j.get<std::vector<std::string>>();
  });

  if (!r.problems().empty()) throw ConfigErrors(r.problems());
  try {
    c.validate();
  } catch (const ConfigErrors& e) {
    std::vector<std::string> problems;
    for (const auto& p : e.problems()) problems.push_back(origin + ": " + p);
    throw ConfigErrors(std::move(problems));
  }
  return c;
}

Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read calibration file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_calibration(text.str(), path.string());
}

std::string calibration_to_json(const Calibration& c) {
  json root;
  root["format"] = "udcsim-calibration";
  root["version"] = 1;
  root["media"] = {{"lab", medium_to(c.lab.medium)}, {"open_water", medium_to(c.open_water.medium)}};
  root["reference_distance_m"] = {{"lab", c.lab.reference_distance_m},
                                  {"open_water", c.open_water.reference_distance_m}};
  root["spl_distance"] = {{"lab", knots_to(c.lab.spl_distance)},
                          {"open_water", knots_to(c.open_water.spl_distance)}};
  json deg;
  deg["lab_write"] = knots_to(c.lab.write_curve.table().knots());
  deg["open_water_write"] = knots_to(c.open_water.write_curve.table().knots());
  deg["lab_read"] = c.lab.read_curve ? knots_to(c.lab.read_curve->table().knots()) : json(nullptr);
  deg["open_water_read"] =
      c.open_water.read_curve ? knots_to(c.open_water.read_curve->table().knots()) : json(nullptr);
  root["degradation"] = deg;

  json bands = json::array();
  for (const auto& b : c.resonance.bands) {
    bands.push_back({{"center_hz", b.center_hz}, {"half_width_hz", b.half_width_hz}, {"gain", b.gain}});
  }
  root["resonance"] = {{"bands", bands}, {"off_band_gain", c.resonance.off_band_gain}};
  root["angle_table"] = knots_to(c.angle_table);
  json pos = json::object();
  for (const auto& [loc, f] : c.position_factors) pos[std::to_string(loc)] = f;
  root["position_factors"] = pos;
  root["pes"] = knots_to(c.pes_curve);
  root["displacement"] = {{"displacement_nm", c.displacement.displacement_nm},
                          {"spl_db", c.displacement.spl_db}};
  root["disk"] = {{"baseline_throughput", c.disk.baseline_throughput},
                  {"unresponsive_threshold_db", c.disk.unresponsive_threshold_db},
                  {"threshold_jitter_db", c.disk.threshold_jitter_db},
                  {"unresponsive_dwell_s", c.disk.unresponsive_dwell_s},
                  {"permanent_damage_rate", c.disk.permanent_damage_rate}};
  root["raid"] = {{"drop_timeout_s", c.raid.drop_timeout_s},
                  {"degraded_drop_timeout_s", c.raid.degraded_drop_timeout_s}};
  root["noise"] = {{"sigma_fraction", c.noise_sigma_fraction}};

  json hit = json::object();
  for (const auto& [key, p] : c.cache.hit_ratio_table) {
    hit[std::string(to_string(key.first))][fmt::format("{}", key.second)] = p;
  }
  root["cache"] = {{"policy", c.cache.policy},
                   {"hit_ratio", hit},
                   {"hit_latency_ms", {c.cache.hit_latency_band.lo_ms, c.cache.hit_latency_band.hi_ms}},
                   {"miss_latency_benign_ms",
                    {c.cache.miss_latency_band_benign.lo_ms, c.cache.miss_latency_band_benign.hi_ms}},
                   {"miss_latency_attacked_ms",
                    {c.cache.miss_latency_band_attacked.lo_ms, c.cache.miss_latency_band_attacked.hi_ms}}};

  json tables = json::object();
  for (const auto& [count, table] : c.db.latency_model) tables[std::to_string(count)] = knots_to(table.knots());
  root["db_latency"] = {{"total_nodes", c.db.total_nodes},
                        {"out_of_service_above_db", c.db.out_of_service_above_db},
                        {"tables", tables}};
  root["vm_inflation"] = {{"onset_db", c.vm.onset_db},
                          {"max_pre_failure_db", c.vm.max_pre_failure_db},
                          {"prolog_max_factor", c.vm.prolog_max_factor},
                          {"running_max_factor", c.vm.running_max_factor},
                          {"failure_db", c.vm.failure_db}};
  root["figure_derived"] = c.figure_derived;
  return root.dump(2) + "\n";
}

Calibration resolve_calibration(const std::optional<std::filesystem::path>& flag) {
  if (flag) return load_calibration(*flag);
  if (const char* env = std::getenv("UDCSIM_CALIBRATION"); env && *env) return load_calibration(env);
  return default_calibration();
}

}  // namespace udc
