#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "plots.hpp"
#include "recipes.hpp"
#include "udcsim/error.hpp"

namespace udc::cli {

using engine::format_number;
using nlohmann::json;

namespace {

// Exit statuses.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kConfig = 2;
constexpr int kRuntime = 3;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string num(double v) { return format_number(v); }

// Reads recipe parameters, collecting every problem before failing.
class Params {
 public:
  Params(const json& j, std::string where, std::vector<std::string>& problems, fs::path base)
      : j_(j), where_(std::move(where)), problems_(problems), base_(std::move(base)) {
    if (!j_.is_object()) problems_.push_back(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    known_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      bad(key, "wrong type");
    }
  }

  void environment(const char* key, Environment& out) {
    std::string s;
    if (!take(key, s)) return;
    if (auto e = parse_environment(s)) {
      out = *e;
    } else {
      bad(key, "expected 'lab' or 'open_water'");
    }
  }

  void workload(const char* key, WorkloadKind& out) {
    std::string s;
    if (!take(key, s)) return;
    if (auto k = parse_workload_kind(s)) {
      out = *k;
    } else {
      bad(key, "unknown workload '" + s + "'");
    }
  }

  void workloads(const char* key, std::vector<WorkloadKind>& out) {
    std::vector<std::string> names;
    if (!take(key, names)) return;
    out.clear();
    for (const auto& s : names) {
      if (auto k = parse_workload_kind(s)) {
        out.push_back(*k);
      } else {
        bad(key, "unknown workload '" + s + "'");
      }
    }
  }

  void path(const char* key, std::optional<fs::path>& out) {
    std::string s;
    if (!take(key, s)) return;
    fs::path p(s);
    out = p.is_relative() && !base_.empty() ? base_ / p : p;
  }

  void array(const char* key, ArraySpec& out) {
    known_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return;
    Params a(j_.at(key), where_ + "." + key, problems_, base_);
    a.get("offsets_db", out.offsets_db);
    a.known_.insert("thresholds_db");
    if (a.j_.is_object() && a.j_.contains("thresholds_db")) {
      out.thresholds_db.clear();
      try {
        for (const auto& t : a.j_.at("thresholds_db")) {
          out.thresholds_db.push_back(t.is_null() ? std::nullopt : std::optional<double>(t.get<double>()));
        }
      } catch (const json::exception&) {
        a.bad("thresholds_db", "expected numbers or nulls");
      }
    }
    double dwell = -1.0;
    a.get("dwell_s", dwell);
    if (dwell >= 0.0) out.dwell_s = dwell;
    a.finish();
  }

  void finish() {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items()) {
      if (!known_.count(k)) problems_.push_back(fmt::format("{}: unknown key '{}'", where_, k));
    }
  }

 private:
  template <typename T>
  bool take(const char* key, T& out) {
    known_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return false;
    try {
      out = j_.at(key).get<T>();
      return true;
    } catch (const json::exception&) {
      bad(key, "wrong type");
      return false;
    }
  }

  void bad(const std::string& key, const std::string& why) {
    problems_.push_back(fmt::format("{}.{}: {}", where_, key, why));
  }

  const json& j_;
  std::string where_;
  std::vector<std::string>& problems_;
  fs::path base_;
  std::set<std::string> known_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Applies `fill` to the --scenario parameter file, if one was given.
void read_params(const Options& o, const std::string& recipe, const std::function<void(Params&)>& fill) {
  if (!o.scenario) return;
  json j;
  try {
    j = json::parse(read_file(*o.scenario));
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", o.scenario->string(), e.what()));
  }
  std::vector<std::string> problems;
  const std::string where = o.scenario->filename().string();
  Params p(j, where, problems, o.scenario->parent_path());
  std::string named = recipe;
  p.get("recipe", named);
  if (named != recipe) problems.push_back(fmt::format("{}: written for '{}', not '{}'", where, named, recipe));
  std::string ignored;
  p.get("description", ignored);
  fill(p);
  p.finish();
  if (!problems.empty()) throw ConfigErrors(std::move(problems));
}

engine::ScenarioConfig scenario_or(const Options& o, engine::ScenarioConfig (*fallback)()) {
  auto cfg = o.scenario ? engine::load_scenario(*o.scenario) : fallback();
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

template <typename P>
void common(P& p, const Options& o) {
  if (o.seed) p.seed = *o.seed;
  if (o.trials) p.trials = *o.trials;
}

class Output {
 public:
  Output(const Options& o) : dir_(o.out), quiet_(o.quiet) { fs::create_directories(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  std::ofstream open(const std::string& name) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw Error("cannot write " + path(name).string());
    written_.push_back(name);
    return out;
  }

  void plot(const std::string& name, const std::string& csv, const PlotSpec& spec) {
    emit_plot(path(csv), path(name), spec);
    written_.push_back(name);
  }

  void note(const std::string& name) { written_.push_back(name); }

  void summary(const engine::Summary& s) {
    auto out = open("summary.txt");
    s.write(out);
  }

  void report() const {
    if (quiet_) return;
    for (const auto& f : written_) std::cout << "wrote " << (dir_ / f).string() << '\n';
  }

 private:
  fs::path dir_;
  bool quiet_;
  std::vector<std::string> written_;
};

std::string join_flagged(const std::vector<SweepPoint>& pts) {
  std::string s;
  for (const auto& p : pts) {
    if (!p.flagged) continue;
    if (!s.empty()) s += ' ';
    s += fmt::format("{}", p.frequency_hz);
  }
  return s;
}

int cmd_sweep(const Options& o, const Calibration& cal) {
  SweepParams p;
  read_params(o, "sweep", [&](Params& r) {
    r.environment("environment", p.environment);
    r.get("delta_spl", p.delta_spl);
    r.get("start_hz", p.start_hz);
    r.get("stop_hz", p.stop_hz);
    r.get("step_hz", p.step_hz);
    r.get("trials", p.trials);
    r.get("duration_s", p.duration_s);
    r.get("flag_decrease", p.flag_decrease);
    r.array("array", p.array);
    r.get("seed", p.seed);
  });
  common(p, o);
  const auto pts = frequency_sweep(p, cal);
  Output out(o);
  {
    auto f = out.open("sweep.csv");
    f << "frequency_hz,normalized_throughput,decrease,flagged\n";
    for (const auto& s : pts) {
      f << num(s.frequency_hz) << ',' << num(s.normalized) << ',' << num(1.0 - s.normalized) << ','
        << (s.flagged ? 1 : 0) << '\n';
    }
  }
  engine::Summary sum;
  sum.set("recipe", std::string("sweep"));
  sum.set("seed", static_cast<long long>(p.seed));
  sum.set("delta_spl", p.delta_spl);
  sum.set("flag_decrease", p.flag_decrease);
  sum.set("flagged_hz", join_flagged(pts));
  out.summary(sum);
  out.plot("sweep.gp", "sweep.csv",
           {"normalized throughput vs frequency", "frequency (Hz)", "normalized throughput",
            "frequency_hz", {{"normalized_throughput", "RAID 5 write", {}}},
            {fmt::format("set arrow from graph 0, first {0} to graph 1, first {0} nohead dt 2",
                         num(1.0 - p.flag_decrease))}});
  out.report();
  return kOk;
}

void read_volume(Params& r, VolumeParams& p) {
  r.environment("environment", p.environment);
  r.get("levels_db", p.levels_db);
  r.get("frequency_hz", p.frequency_hz);
  r.get("trials", p.trials);
  r.get("duration_s", p.duration_s);
  r.workload("workload", p.workload);
  r.array("array", p.array);
  r.get("seed", p.seed);
}

int cmd_volume(const Options& o, const Calibration& cal) {
  VolumeParams p;
  read_params(o, "volume-curve", [&](Params& r) { read_volume(r, p); });
  common(p, o);
  const auto pts = volume_curve(p, cal);
  Output out(o);
  {
    auto f = out.open("volume_curve.csv");
    f << "delta_spl_db,mean_throughput_mb_s,normalized_throughput,stddev_mb_s,pes_ratio\n";
    for (const auto& v : pts) {
      f << num(v.delta_spl) << ',' << num(v.mean_mb_s) << ',' << num(v.normalized) << ','
        << num(v.stddev_mb_s) << ',' << num(v.pes_ratio) << '\n';
    }
  }
  engine::Summary sum;
  sum.set("recipe", std::string("volume-curve"));
  sum.set("environment", std::string(to_string(p.environment)));
  sum.set("seed", static_cast<long long>(p.seed));
  for (const auto& v : pts) sum.set(fmt::format("normalized.{}", num(v.delta_spl)), v.normalized);
  out.summary(sum);
  out.plot("volume_curve.gp", "volume_curve.csv",
           {"throughput vs level above noise", "delta SPL (dB)", "normalized throughput", "delta_spl_db",
            {{"normalized_throughput", std::string(to_string(p.environment)), {}}, {"pes_ratio", "PES ratio", {}}},
            {"set yrange [0:1.1]"}});
  out.report();
  return kOk;
}

int cmd_positions(const Options& o, const Calibration& cal) {
  PositionParams p;
  read_params(o, "positions", [&](Params& r) {
    r.get("delta_spl", p.delta_spl);
    r.get("frequency_hz", p.frequency_hz);
    r.get("locations", p.locations);
    r.get("trials", p.trials);
    r.get("duration_s", p.duration_s);
    r.array("array", p.array);
    r.get("seed", p.seed);
  });
  common(p, o);
  const auto pts = position_study(p, cal);
  Output out(o);
  {
    auto f = out.open("positions.csv");
    f << "location,position_factor,normalized_throughput\n";
    for (const auto& v : pts) f << v.location << ',' << num(v.factor) << ',' << num(v.normalized) << '\n';
  }
  engine::Summary sum;
  sum.set("recipe", std::string("positions"));
  sum.set("seed", static_cast<long long>(p.seed));
  for (const auto& v : pts) sum.set(fmt::format("normalized.{}", v.location), v.normalized);
  out.summary(sum);
  out.plot("positions.gp", "positions.csv",
           {"throughput by injection location", "location", "normalized throughput", "location",
            {{"normalized_throughput", "RAID 5 write", {}, "boxes"}},
            {"set style fill solid 0.5", "set boxwidth 0.6", "set yrange [0:1.1]"}});
  out.report();
  return kOk;
}

int cmd_angle(const Options& o, const Calibration& cal) {
  AngleParams p;
  read_params(o, "angle", [&](Params& r) {
    r.get("delta_spl", p.delta_spl);
    r.get("frequency_hz", p.frequency_hz);
    r.get("angles_deg", p.angles_deg);
    r.get("trials", p.trials);
    r.get("duration_s", p.duration_s);
    r.array("array", p.array);
    r.get("seed", p.seed);
  });
  common(p, o);
  const auto pts = angle_study(p, cal);
  Output out(o);
  {
    auto f = out.open("angle.csv");
    f << "angle_deg,angle_factor,normalized_throughput,relative_effectiveness\n";
    for (const auto& v : pts) {
      f << num(v.angle_deg) << ',' << num(v.factor) << ',' << num(v.normalized) << ','
        << num(v.relative_effectiveness) << '\n';
    }
  }
  engine::Summary sum;
  sum.set("recipe", std::string("angle"));
  sum.set("seed", static_cast<long long>(p.seed));
  for (const auto& v : pts) sum.set(fmt::format("relative_effectiveness.{}", num(v.angle_deg)), v.relative_effectiveness);
  out.summary(sum);
  out.plot("angle.gp", "angle.csv",
           {"attack effectiveness vs speaker angle", "angle (deg)", "fraction", "angle_deg",
            {{"angle_factor", "angle factor", {}}, {"relative_effectiveness", "relative effectiveness", {}}},
            {"set yrange [0:1.1]"}});
  out.report();
  return kOk;
}

int cmd_db(const Options& o, const Calibration& cal) {
  DbParams p;
  read_params(o, "db-latency", [&](Params& r) {
    r.get("underwater_nodes", p.underwater_nodes);
    r.get("start_db", p.start_db);
    r.get("stop_db", p.stop_db);
    r.get("step_db", p.step_db);
  });
  const auto pts = db_latency_sweep(p, cal);
  Output out(o);
  {
    auto f = out.open("db_latency.csv");
    f << "underwater_nodes,delta_spl_db,normalized_latency,in_service\n";
    for (const auto& v : pts) {
      f << v.underwater_nodes << ',' << num(v.delta_spl) << ','
        << (v.normalized_latency ? num(*v.normalized_latency) : std::string()) << ','
        << (v.normalized_latency ? 1 : 0) << '\n';
    }
  }
  engine::Summary sum;
  sum.set("recipe", std::string("db-latency"));
  for (int n : p.underwater_nodes) {
    double peak = 0.0;
    for (const auto& v : pts) {
      if (v.underwater_nodes == n && v.normalized_latency) peak = std::max(peak, *v.normalized_latency);
    }
    sum.set(fmt::format("peak_normalized_latency.{}", n), peak);
  }
  out.summary(sum);
  PlotSpec spec{"cluster latency vs level above noise", "delta SPL (dB)", "normalized latency",
                "delta_spl_db", {}, {}};
  for (int n : p.underwater_nodes) {
    spec.series.push_back({"normalized_latency", fmt::format("{} underwater nodes", n),
                           {{"underwater_nodes", std::to_string(n)}}});
  }
  out.plot("db_latency.gp", "db_latency.csv", spec);
  out.report();
  return kOk;
}

int cmd_fem(const Options& o, const Calibration&) {
  FemParams p;
  read_params(o, "fem-attenuation", [&](Params& r) {
    r.get("base_displacement_nm", p.base_displacement_nm);
    r.get("alpha_np_per_km", p.alpha_np_per_km);
    r.get("distances_m", p.distances_m);
  });
  const auto pts = fem_attenuation(p);
  Output out(o);
  {
    auto f = out.open("fem_attenuation.csv");
    f << "distance_m,displacement_nm\n";
    for (const auto& v : pts) f << num(v.distance_m) << ',' << num(v.displacement_nm) << '\n';
  }
  engine::Summary sum;
  sum.set("recipe", std::string("fem-attenuation"));
  sum.set("alpha_np_per_km", p.alpha_np_per_km);
  if (!pts.empty()) {
    sum.set("distance_m", pts.back().distance_m);
    sum.set("displacement_nm", pts.back().displacement_nm);
  }
  out.summary(sum);
  out.plot("fem_attenuation.gp", "fem_attenuation.csv",
           {"displacement vs distance", "distance (m)", "displacement (nm)", "distance_m",
            {{"displacement_nm", fmt::format("alpha = {} Np/km", p.alpha_np_per_km), {}}}, {}});
  out.report();
  return kOk;
}

int cmd_cache(const Options& o, const Calibration& cal) {
  CacheParams p;
  read_params(o, "cache-bench", [&](Params& r) {
    r.get("sizes_gb", p.sizes_gb);
    r.workloads("workloads", p.workloads);
    r.get("hit_draws", p.hit_draws);
    r.get("latency_samples", p.latency_samples);
    r.get("seed", p.seed);
  });
  if (o.seed) p.seed = *o.seed;
  Output out(o);
  engine::Summary sum;
  sum.set("recipe", std::string("cache-bench"));
  sum.set("seed", static_cast<long long>(p.seed));
  {
    auto f = out.open("cache_hit_ratio.csv");
    f << "workload,cache_gb,draws,hits,measured_hit_ratio,configured_hit_ratio\n";
    for (auto k : p.workloads) {
      for (double gb : p.sizes_gb) {
        const auto r = cache_hit_ratio(cal, k, gb, p.hit_draws, p.seed);
        f << to_string(k) << ',' << num(gb) << ',' << r.draws << ',' << r.hits << ',' << num(r.measured())
          << ',' << num(r.configured) << '\n';
        sum.set(fmt::format("hit_ratio.{}.{}", to_string(k), num(gb)), r.measured());
      }
    }
  }
  {
    auto f = out.open("cache_latency_cdf.csv");
    f << "workload,cache_gb,condition,quantile,latency_ms\n";
    for (auto k : p.workloads) {
      for (double gb : p.sizes_gb) {
        for (bool attacked : {false, true}) {
          auto v = cache_latency_samples(cal, k, gb, attacked, p.latency_samples, p.seed);
          std::sort(v.begin(), v.end());
          const char* cond = attacked ? "attacked" : "benign";
          if (!v.empty()) {
            sum.set(fmt::format("latency.{}.{}.{}.min_ms", to_string(k), num(gb), cond), v.front());
            sum.set(fmt::format("latency.{}.{}.{}.max_ms", to_string(k), num(gb), cond), v.back());
          }
          for (int q = 0; q <= 100 && !v.empty(); ++q) {
            const auto idx = static_cast<std::size_t>(
                std::llround(static_cast<double>(q) / 100.0 * static_cast<double>(v.size() - 1)));
            f << to_string(k) << ',' << num(gb) << ',' << cond << ',' << num(q / 100.0) << ','
              << num(v[idx]) << '\n';
          }
        }
      }
    }
  }
  out.summary(sum);
  PlotSpec spec{"write latency distribution", "latency (ms)", "cumulative fraction", "latency_ms", {},
                {"set logscale x"}};
  for (const char* cond : {"benign", "attacked"}) {
    for (double gb : p.sizes_gb) {
      spec.series.push_back({"quantile", fmt::format("random-write {} GB {}", gb, cond),
                             {{"workload", "random-write"}, {"cache_gb", num(gb)}, {"condition", cond}},
                             "lines"});
    }
  }
  out.plot("cache_latency.gp", "cache_latency_cdf.csv", spec);
  out.report();
  return kOk;
}

int cmd_snia(const Options& o, const Calibration& cal) {
  SniaParams p;
  read_params(o, "snia-replay", [&](Params& r) {
    r.get("traces", p.traces);
    r.get("levels_db", p.levels_db);
    r.get("frequency_hz", p.frequency_hz);
    r.get("trials", p.trials);
    r.get("requests", p.requests);
    r.get("time_compression", p.time_compression);
    r.get("tick_s", p.tick_s);
    r.array("array", p.array);
    r.path("trace_dir", p.trace_dir);
    r.get("seed", p.seed);
  });
  common(p, o);
  const auto pts = snia_replay(p, cal);
  Output out(o);
  {
    auto f = out.open("snia_replay.csv");
    f << "trace,delta_spl_db,trial,requests,issued,fulfilled,fulfilled_fraction,storage_failed,failed_at_s\n";
    for (const auto& v : pts) {
      f << v.trace << ',' << num(v.delta_spl) << ',' << v.trial << ',' << v.requests << ',' << v.issued << ',' << v.fulfilled << ','
        << num(v.fraction()) << ',' << (v.failed ? 1 : 0) << ','
        << (v.failed_at_s ? num(*v.failed_at_s) : std::string()) << '\n';
    }
  }
  engine::Summary sum;
  sum.set("recipe", std::string("snia-replay"));
  sum.set("seed", static_cast<long long>(p.seed));
  for (const auto& name : p.traces) {
    for (double level : p.levels_db) {
      double total = 0.0;
      int n = 0;
      for (const auto& v : pts) {
        if (v.trace == name && v.delta_spl == level) {
          total += v.fraction();
          ++n;
        }
      }
      sum.set(fmt::format("fulfilled.{}.{}", name, num(level)), n ? total / n : 0.0);
    }
  }
  out.summary(sum);
  PlotSpec spec{"requests fulfilled within the baseline budget", "delta SPL (dB)", "fulfilled fraction",
                "delta_spl_db", {}, {"set yrange [0:1.05]"}};
  for (const auto& name : p.traces) spec.series.push_back({"fulfilled_fraction", name, {{"trace", name}}, "points"});
  out.plot("snia_replay.gp", "snia_replay.csv", spec);
  out.report();
  return kOk;
}

void read_detect(Params& r, DetectParams& p) {
  r.get("disks", p.disks);
  r.get("profile_traces", p.profile_traces);
  r.get("pool_traces", p.pool_traces);
  r.get("levels_db", p.levels_db);
  r.get("combinations", p.combinations);
  r.get("duration_s", p.duration_s);
  r.get("frequency_hz", p.frequency_hz);
  r.get("seed", p.seed);
}

int cmd_detect_profile(const Options& o, const Calibration& cal) {
  DetectParams p;
  read_params(o, "detect-profile", [&](Params& r) { read_detect(r, p); });
  if (o.seed) p.seed = *o.seed;
  if (o.trials) p.profile_traces = *o.trials;
  const auto profiles = build_profiles(p, cal);
  Output out(o);
  detector::save_profiles(out.path("profiles"), profiles);
  out.note("profiles/manifest.json");
  {
    auto f = out.open("detect_profile.csv");
    f << "disk,traces,centroid_mean_mb_s,calibration_distance_mean,calibration_distance_max\n";
    for (const auto& pr : profiles) {
      double mean = 0.0;
      double mx = 0.0;
      for (double d : pr.calibration_distances) {
        mean += d;
        mx = std::max(mx, d);
      }
      mean /= static_cast<double>(pr.calibration_distances.size());
      f << pr.disk_id << ',' << pr.traces.size() << ',' << num(pr.centroid.mean()) << ',' << num(mean) << ','
        << num(mx) << '\n';
    }
  }
  engine::Summary sum;
  sum.set("recipe", std::string("detect-profile"));
  sum.set("seed", static_cast<long long>(p.seed));
  sum.set("disks", static_cast<long long>(profiles.size()));
  sum.set("traces_per_disk", static_cast<long long>(p.profile_traces));
  out.summary(sum);
  out.report();
  return kOk;
}

int cmd_detect_eval(const Options& o, const Calibration& cal) {
  DetectParams p;
  read_params(o, "detect-eval", [&](Params& r) { read_detect(r, p); });
  if (o.seed) p.seed = *o.seed;
  if (o.trials) p.combinations = static_cast<std::size_t>(*o.trials);
  const auto profiles = o.profiles ? detector::load_profiles(*o.profiles) : build_profiles(p, cal);
  const auto pts = detect_eval(p, cal, profiles);
  Output out(o);
  auto rate = [](const std::optional<double>& r) { return r ? num(*r) : std::string(); };
  {
    auto f = out.open("detect_eval.csv");
    f << "delta_spl_db,combinations,positives,negatives,tpr,fpr,tpr_any_attacked,fpr_any_attacked\n";
    for (const auto& v : pts) {
      const auto& e = v.evaluation;
      f << num(v.delta_spl) << ',' << e.combinations << ',' << e.majority.positives << ','
        << e.majority.negatives << ',' << rate(e.majority.tpr()) << ',' << rate(e.majority.fpr()) << ','
        << rate(e.any_attacked.tpr()) << ',' << rate(e.any_attacked.fpr()) << '\n';
    }
  }
  engine::Summary sum;
  sum.set("recipe", std::string("detect-eval"));
  sum.set("seed", static_cast<long long>(p.seed));
  for (const auto& v : pts) {
    sum.set(fmt::format("tpr.{}", num(v.delta_spl)), rate(v.evaluation.majority.tpr()));
    sum.set(fmt::format("fpr.{}", num(v.delta_spl)), rate(v.evaluation.majority.fpr()));
  }
  out.summary(sum);
  emit_roc(out.path("detect_eval.csv"), out.path("detect_eval.gp"), "fpr", "tpr", "delta_spl_db");
  out.note("detect_eval.gp");
  out.report();
  return kOk;
}

void write_run(Output& out, const engine::RunResult& r, const engine::ScenarioConfig& cfg,
               const std::string& prefix) {
  {
    auto f = out.open(prefix + "metrics.csv");
    r.metrics.write_csv(f);
  }
  {
    auto f = out.open(prefix + "events.csv");
    r.events.write_csv(f);
  }
  std::vector<std::string> ids;
  for (const auto& n : cfg.nodes) ids.push_back(n.id);
  emit_timeline(out.path(prefix + "metrics.csv"), out.path(prefix + "events.csv"),
                out.path(prefix + "timeline.gp"), ids);
  out.note(prefix + "timeline.gp");
}

int cmd_run(const Options& o, const Calibration& cal_default, engine::ScenarioConfig (*fallback)()) {
  if (!o.scenario && !fallback) throw UsageError("run: --scenario is required");
  auto cfg = scenario_or(o, fallback);
  // A calibration named by the scenario applies unless --calibration overrides it.
  const Calibration cal = (cfg.calibration && !o.calibration) ? load_calibration(*cfg.calibration) : cal_default;
  const auto r = engine::run(cfg, cal);
  Output out(o);
  write_run(out, r, cfg, "");
  out.summary(r.summary);
  out.report();
  return kOk;
}

int cmd_vm(const Options& o, const Calibration& cal_default) {
  auto cfg = scenario_or(o, &default_vm_scenario);
  const Calibration cal = (cfg.calibration && !o.calibration) ? load_calibration(*cfg.calibration) : cal_default;
  const int trials = o.trials.value_or(10);
  if (trials < 1) throw ValidationError("vm-migration: trials must be >= 1");
  if (cfg.nodes.empty()) throw ValidationError("vm-migration: scenario has no nodes");
  std::string uw;
  for (const auto& n : cfg.nodes) {
    if (n.location == distsys::NodeLocation::kUnderwater) {
      uw = n.id;
      break;
    }
  }
  if (uw.empty()) throw ValidationError("vm-migration: scenario has no underwater node");

  Output out(o);
  engine::Summary sum;
  sum.set("recipe", std::string("vm-migration"));
  sum.set("underwater_host", uw);
  double lo = 1.0;
  double hi = 0.0;
  {
    auto f = out.open("vm_migration.csv");
    f << "seed,baseline_underwater,attacked_underwater,reduction,unfinished_underwater,blocked_underwater\n";
    for (int i = 0; i < trials; ++i) {
      const auto seed = cfg.seed + static_cast<std::uint64_t>(i);
      const auto t = vm_migration_trial(cfg, cal, seed, uw);
      f << t.seed << ',' << t.baseline_underwater << ',' << t.attacked_underwater << ',' << num(t.reduction())
        << ',' << t.unfinished_underwater << ',' << t.blocked_underwater << '\n';
      lo = std::min(lo, t.reduction());
      hi = std::max(hi, t.reduction());
    }
  }
  sum.set("trials", static_cast<long long>(trials));
  sum.set("reduction_min", lo);
  sum.set("reduction_max", hi);

  const auto first = engine::run(cfg, cal);
  write_run(out, first, cfg, "vm_");
  {
    auto f = out.open("vm_state_durations.csv");
    f << "delta_spl_db,prolog_factor,running_factor\n";
    for (int level = 20; level <= 36; level += 2) {
      f << num(level) << ',' << num(cal.vm.factor(distsys::VmState::kProlog, level)) << ','
        << num(cal.vm.factor(distsys::VmState::kRunning, level)) << '\n';
    }
  }
  out.plot("vm_state_durations.gp", "vm_state_durations.csv",
           {"VM state duration inflation", "delta SPL (dB)", "duration factor", "delta_spl_db",
            {{"prolog_factor", "PROLOG", {}}, {"running_factor", "RUNNING", {}}}, {}});
  out.plot("vm_migration.gp", "vm_migration.csv",
           {"underwater host VM share reduction", "seed", "reduction", "seed",
            {{"reduction", "1 - attacked/baseline", {}, "points"}},
            {"set yrange [0:1]"}});
  for (const auto& [k, v] : first.summary.entries()) {
    if (k.rfind("vm.", 0) == 0) sum.set("first_seed." + k, v);
  }
  out.summary(sum);
  out.report();
  return kOk;
}

using Handler = std::function<int(const Options&, const Calibration&)>;

const std::vector<std::pair<std::string, Handler>>& table() {
  static const std::vector<std::pair<std::string, Handler>> t = {
      {"sweep", cmd_sweep},
      {"volume-curve", cmd_volume},
      {"positions", cmd_positions},
      {"angle", cmd_angle},
      {"hdfs-cascade", [](const Options& o, const Calibration& c) { return cmd_run(o, c, &default_hdfs_scenario); }},
      {"db-latency", cmd_db},
      {"vm-migration", cmd_vm},
      {"snia-replay", cmd_snia},
      {"cache-bench", cmd_cache},
      {"fem-attenuation", cmd_fem},
      {"detect-profile", cmd_detect_profile},
      {"detect-eval", cmd_detect_eval},
      {"run", [](const Options& o, const Calibration& c) { return cmd_run(o, c, nullptr); }},
  };
  return t;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : table()) n.push_back(k);
    return n;
  }();
  return names;
}

int run_subcommand(const std::string& name, const Options& opts) {
  try {
    for (const auto& [k, handler] : table()) {
      if (k != name) continue;
      const Calibration cal = resolve_calibration(opts.calibration);
      return handler(opts, cal);
    }
    throw UsageError("unknown subcommand '" + name + "'");
  } catch (const UsageError& e) {
    std::cerr << "udcsim: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "udcsim: " << e.what() << '\n';
    return kConfig;
  } catch (const ValidationError& e) {
    std::cerr << "udcsim: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "udcsim: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace udc::cli
