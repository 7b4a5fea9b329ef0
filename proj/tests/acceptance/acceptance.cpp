// Acceptance run: one PASS/FAIL line per criterion, each within its time
// budget. Usage: udcsim_acceptance <path-to-udcsim> <scratch-dir>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "recipes.hpp"
#include "udcsim/acoustics.hpp"
#include "udcsim/calibration.hpp"
#include "udcsim/detector.hpp"
#include "udcsim/distsys.hpp"
#include "udcsim/engine/rng.hpp"
#include "udcsim/engine/scenario.hpp"
#include "udcsim/storage.hpp"
#include "udcsim/workload.hpp"

namespace fs = std::filesystem;
namespace ac = udc::acoustics;
namespace st = udc::storage;
namespace wl = udc::workload;
namespace dt = udc::detector;
namespace cli = udc::cli;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records sub-check failures and keeps the first few messages.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_.push_back(what);
  }
  Outcome outcome(std::string summary) const {
    if (failures_ > 0) {
      for (const auto& n : notes_) summary += "; " + n;
      if (failures_ > 3) summary += fmt::format("; +{} more", failures_ - 3);
    }
    return {failures_ == 0, summary};
  }

 private:
  int failures_ = 0;
  std::vector<std::string> notes_;
};

Outcome attenuation() {
  const auto pts = cli::fem_attenuation({145.5, 0.1, {1000.0}});
  const double v = pts.back().displacement_nm;
  const bool ok = std::abs(v - 131.2) <= 131.2 * 0.005;
  return {ok, fmt::format("{:.6f} nm at 1 km (target 131.2 +- 0.5%)", v)};
}

Outcome volume_endpoints() {
  cli::VolumeParams p;
  p.levels_db = {26.0, 32.0};
  p.duration_s = 30.0;
  const auto pts = cli::volume_curve(p, udc::default_calibration());
  Checks c;
  c.expect(std::abs(pts[0].normalized - 0.83) <= 0.05, "26 dB outside 0.83 +- 0.05");
  c.expect(pts[1].normalized <= 0.02, "32 dB above 0.02");
  return c.outcome(fmt::format("26 dB -> {:.4f}, 32 dB -> {:.4f} of baseline", pts[0].normalized,
                               pts[1].normalized));
}

int rank(st::ArrayStatus s) {
  return s == st::ArrayStatus::kHealthy ? 0 : s == st::ArrayStatus::kDegraded ? 1 : 2;
}

Outcome raid_state_machine() {
  Checks c;
  std::vector<std::size_t> order{0, 1, 2, 3};
  int orderings = 0;
  const st::Raid5Config cfg{10.0, 40.0};
  do {
    // Whole permutations, and every prefix, each stalled 5 s after the last.
    for (std::size_t k = 1; k <= 4; ++k) {
      ++orderings;
      st::Raid5Array a(4, cfg);
      std::vector<st::DiskState> states(4);
      int last = 0;
      bool failed_seen = false;
      std::vector<int> trace;
      for (int t = 0; t < 400; ++t) {
        for (std::size_t i = 0; i < k; ++i) {
          if (t == static_cast<int>(5 * i)) {
            states[order[i]].responsive = false;
            states[order[i]].current_multiplier = 0.0;
          }
        }
        a.step(states, 1.0);
        const int r = rank(a.status());
        if (r < last) c.expect(false, "status moved backwards");
        if (failed_seen) c.expect(r == 2, "left failed");
        failed_seen = failed_seen || r == 2;
        if (trace.empty() || trace.back() != r) trace.push_back(r);
        last = r;
      }
      const std::vector<int> expected = k == 1 ? std::vector<int>{0, 1} : std::vector<int>{0, 1, 2};
      c.expect(trace == expected, fmt::format("ordering with {} stalled members: wrong path", k));
      c.expect(a.step(states, 1.0).empty(), "failed array emitted events");
    }
  } while (std::next_permutation(order.begin(), order.end()));

  // Bottleneck: dropping the arg-min member raises throughput to the next
  // slowest, for every choice of slowest member.
  for (std::size_t slow = 0; slow < 4; ++slow) {
    st::Raid5Array a(4);
    std::vector<st::DiskModel> models(4);
    std::vector<st::DiskState> states(4);
    for (std::size_t i = 0; i < 4; ++i) states[i].current_multiplier = i == slow ? 0.2 : 0.5 + 0.1 * i;
    const double before = st::raid5_throughput(a, states, models);
    a.drop(slow);
    const double after = st::raid5_throughput(a, states, models);
    c.expect(std::abs(before - 20.0) < 1e-9 && after > before, "no spike after dropping arg-min");
  }

  // The same spike through the storage path: the most sensitive disk stalls
  // at 32 dB and is dropped; the survivors then outrun the 30 dB array.
  const auto cal = udc::default_calibration();
  auto make = [&] {
    std::vector<st::DiskModel> m(4);
    for (std::size_t i = 0; i < 4; ++i) {
      m[i].write_curve = cal.lab.write_curve;
      m[i].sensitivity_offset_db = i == 0 ? 0.0 : 3.0;
      m[i].unresponsive_threshold_db = i == 0 ? 31.0 : 36.0;
      m[i].unresponsive_dwell_s = 60.0;
    }
    return wl::StorageTarget::raid5(m, cal.raid);
  };
  auto at30 = make();
  auto at32 = make();
  double rate30 = 0.0, rate32 = 0.0;
  for (int t = 0; t < 400; ++t) {
    rate30 = at30.step({30.0, 0.0, 1.0}, 1.0, udc::WorkloadKind::kSequentialWrite).throughput_mb_s;
    rate32 = at32.step({32.0, 0.0, 1.0}, 1.0, udc::WorkloadKind::kSequentialWrite).throughput_mb_s;
  }
  c.expect(at32.array()->status() == st::ArrayStatus::kDegraded, "32 dB array not degraded");
  c.expect(rate32 > rate30, "no fulfillment spike at 32 dB");
  return c.outcome(fmt::format("{} orderings monotone, failed absorbing; post-drop {:.1f} MB/s at 32 dB "
                               "vs {:.1f} MB/s at 30 dB",
                               orderings, rate32, rate30));
}

Outcome hdfs_cascade() {
  const auto r = udc::engine::run(cli::default_hdfs_scenario(), udc::default_calibration());
  std::vector<std::string> seq;
  double first_drop = -1.0, failed = -1.0, removed = -1.0;
  for (const auto& e : r.events.events()) {
    if (e.subject == "uw" && e.kind == udc::engine::EventKind::kNode) seq.push_back(e.what);
    if (e.kind == udc::engine::EventKind::kRaid && e.what == "dropped" && e.subject.rfind("uw/", 0) == 0) {
      seq.push_back("drop");
      if (first_drop < 0.0) first_drop = e.time;
    }
    if (e.subject == "uw/array" && e.what == "failed") failed = e.time;
    if (e.subject == "uw" && e.what == "removed") removed = e.time;
  }
  Checks c;
  const std::vector<std::string> expected{"blocked", "drop", "live", "blocked", "drop", "removed"};
  c.expect(seq == expected, "sequence differs");
  c.expect(first_drop >= 0.0 && first_drop < 300.0, "first drop not before 5 minutes");
  c.expect(failed >= 0.0 && removed >= failed, "removal does not follow array failure");
  std::string joined;
  for (const auto& s : seq) joined += (joined.empty() ? "" : " > ") + s;
  return c.outcome(fmt::format("{}; drop#1 at {:.0f} s, failed {:.0f} s, removed {:.0f} s", joined,
                               first_drop, failed, removed));
}

Outcome db_latency() {
  const auto db = udc::default_calibration().db;
  const auto at38 = udc::distsys::db_normalized_latency(db, 38.0);
  const auto at0 = udc::distsys::db_normalized_latency(db, 0.0);
  const auto above = udc::distsys::db_normalized_latency(db, 38.01);
  Checks c;
  c.expect(at38 && *at38 == 1.927, "38 dB is not 1.927");
  c.expect(at0 && *at0 == 1.0, "0 dB is not 1.0");
  c.expect(!above, "still in service above 38 dB");
  return c.outcome(fmt::format("38 dB -> {}, 0 dB -> {}, 38.01 dB -> {}", at38 ? fmt::format("{}", *at38) : "-",
                               at0 ? fmt::format("{}", *at0) : "-", above ? "in service" : "out of service"));
}

Outcome vm_migration() {
  const auto cfg = cli::default_vm_scenario();
  const auto cal = udc::default_calibration();
  Checks c;
  double lo = 1.0, hi = 0.0;
  long long stranded = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = cli::vm_migration_trial(cfg, cal, seed);
    const double r = t.reduction();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    c.expect(r >= 0.58 && r <= 0.74, fmt::format("seed {} reduction {:.3f}", seed, r));
    c.expect(t.unfinished_underwater > 0 && t.blocked_underwater == t.unfinished_underwater,
             fmt::format("seed {}: {} of {} stranded VMs BLOCKED", seed, t.blocked_underwater,
                         t.unfinished_underwater));
    stranded += t.unfinished_underwater;
  }
  return c.outcome(fmt::format("reduction {:.3f}..{:.3f} over 10 seeds; {} stranded VMs all BLOCKED", lo, hi,
                               stranded));
}

Outcome cache_bands() {
  const auto cal = udc::default_calibration();
  Checks c;
  const auto attacked = cli::cache_latency_samples(cal, udc::WorkloadKind::kRandomWrite, 1.0, true, 10000, 1);
  const auto benign = cli::cache_latency_samples(cal, udc::WorkloadKind::kRandomWrite, 1.0, false, 10000, 2);
  c.expect(attacked.size() == 10000 && std::all_of(attacked.begin(), attacked.end(),
                                                   [](double v) { return v >= 200.0 && v <= 800.0; }),
           "attacked sample outside [200, 800] ms");
  c.expect(benign.size() == 10000 && std::all_of(benign.begin(), benign.end(),
                                                 [](double v) { return v >= 1.0 && v <= 200.0; }),
           "benign sample outside [1, 200] ms");
  const double sizes[] = {0.5, 1.0, 1.5, 2.0};
  const double table[] = {0.333, 0.569, 0.686, 0.761};
  std::string ratios;
  for (int i = 0; i < 4; ++i) {
    const auto row = cli::cache_hit_ratio(cal, udc::WorkloadKind::kSequentialWrite, sizes[i], 100000, 1);
    c.expect(std::abs(row.measured() - table[i]) <= 0.01, fmt::format("{} GB hit ratio {:.4f}", sizes[i],
                                                                      row.measured()));
    ratios += fmt::format("{}{:.4f}", i ? "/" : "", row.measured());
  }
  return c.outcome(fmt::format("20000 latency samples in band; SW hit ratios {}", ratios));
}

Outcome detector() {
  const auto cal = udc::default_calibration();
  const cli::DetectParams p;
  const auto profiles = cli::build_profiles(p, cal);
  const auto pts = cli::detect_eval(p, cal, profiles);
  Checks c;
  std::string rates;
  for (const auto& pt : pts) {
    const auto tpr = pt.evaluation.majority.tpr();
    const auto fpr = pt.evaluation.majority.fpr();
    c.expect(tpr && *tpr >= 0.95, fmt::format("{} dB TPR", pt.delta_spl));
    c.expect(fpr && *fpr <= 0.01, fmt::format("{} dB FPR", pt.delta_spl));
    rates += fmt::format("{}{:.0f} dB {:.3f}/{:.4f}", rates.empty() ? "" : ", ", pt.delta_spl, tpr.value_or(-1),
                         fpr.value_or(-1));
  }

  // Property suites on the 26 dB pools.
  const auto pools = cli::build_pools(p, cal, 26.0);
  int checked = 0;
  for (std::size_t d = 0; d < pools.benign.size(); ++d) {
    for (std::size_t k = 0; k < 20; ++k) {
      const auto& a = pools.benign[d][k];
      const auto& b = pools.attacked[d][k];
      c.expect(dt::pcm_distance(a, a) == 0.0, "self-distance not zero");
      const double ab = dt::pcm_distance(a, profiles[d].centroid);
      const double bb = dt::pcm_distance(b, profiles[d].centroid);
      c.expect(ab >= 0.0 && bb >= 0.0, "negative distance");
      checked += 2;
    }
  }
  auto rng = udc::engine::derive_rng(p.seed, "acceptance/permutation");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<wl::ThroughputTrace> traces;
    for (std::size_t d = 0; d < profiles.size(); ++d) {
      const auto& pool = rng.bernoulli(0.5) ? pools.attacked[d] : pools.benign[d];
      traces.push_back(pool[rng.below(pool.size())]);
    }
    const bool alarm = dt::classify_disks(traces, profiles).alarm;
    std::vector<std::size_t> order(profiles.size());
    std::iota(order.begin(), order.end(), 0);
    while (std::next_permutation(order.begin(), order.end())) {
      std::vector<wl::ThroughputTrace> pt;
      std::vector<dt::DiskProfile> pp;
      for (std::size_t i : order) {
        pt.push_back(traces[i]);
        pp.push_back(profiles[i]);
      }
      if (dt::classify_disks(pt, pp).alarm != alarm) c.expect(false, "alarm changed under permutation");
    }
  }
  return c.outcome(fmt::format("TPR/FPR {}; {} PCM property checks, 50 x 24 permutations", rates, checked));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const std::string& cli_path, const fs::path& scratch) {
  const fs::path scenarios = fs::path(UDCSIM_SOURCE_DIR) / "scenarios";
  Checks c;
  int files = 0;
  for (const char* name : {"hdfs_cascade", "vm_migration", "benign"}) {
    std::vector<fs::path> dirs;
    for (const char* run : {"a", "b"}) {
      const auto dir = scratch / fmt::format("{}_{}", name, run);
      fs::remove_all(dir);
      const auto cmd = fmt::format("\"{}\" run --quiet --scenario \"{}\" --out \"{}\"", cli_path,
                                   (scenarios / (std::string(name) + ".json")).string(), dir.string());
      const int status = std::system(cmd.c_str());
      c.expect(WIFEXITED(status) && WEXITSTATUS(status) == 0, fmt::format("{} run failed", name));
      dirs.push_back(dir);
    }
    std::vector<std::string> listed;
    if (fs::exists(dirs[0])) {
      for (const auto& e : fs::directory_iterator(dirs[0])) listed.push_back(e.path().filename().string());
    }
    c.expect(!listed.empty(), fmt::format("{} wrote nothing", name));
    for (const auto& f : listed) {
      ++files;
      c.expect(fs::exists(dirs[1] / f) && slurp(dirs[0] / f) == slurp(dirs[1] / f),
               fmt::format("{}/{} differs", name, f));
    }
  }
  return c.outcome(fmt::format("{} output files byte-identical across repeated runs", files));
}

Outcome physics() {
  Checks c;
  auto rng = udc::engine::derive_rng(10, "acceptance/physics");
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double z1 = std::exp(rng.uniform(-5.0, 18.0));
    const double z2 = std::exp(rng.uniform(-5.0, 18.0));
    const auto rt = ac::reflection_transmission(z1, z2);
    worst = std::max(worst, std::abs(rt.transmission - 1.0 - rt.reflection));
  }
  c.expect(worst <= 1e-12, "T != 1 + R");
  double path_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a0 = rng.uniform(0.1, 500.0);
    const double alpha = rng.uniform(0.0, 0.01);
    const double x1 = rng.uniform(0.0, 500.0);
    const double x2 = rng.uniform(0.0, 500.0);
    const double direct = ac::attenuate_amplitude(a0, alpha, x1 + x2);
    const double split = ac::attenuate_amplitude(ac::attenuate_amplitude(a0, alpha, x1), alpha, x2);
    path_err = std::max(path_err, std::abs(direct - split) / a0);
  }
  c.expect(path_err <= 1e-12, "path composition");
  const auto table = ac::make_angle_table(udc::default_calibration().angle_table);
  const double f0 = ac::angle_factor(0, table), f45 = ac::angle_factor(45, table), f90 = ac::angle_factor(90, table);
  c.expect(f0 == 1.0 && f45 == 0.68 && f90 == 0.66, "angle factors");
  return c.outcome(fmt::format("max |T-1-R| {:.1e}, max path error {:.1e}, angles {}/{}/{}", worst, path_err, f0,
                               f45, f90));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: udcsim_acceptance <udcsim> <scratch-dir>\n";
    return 2;
  }
  const std::string cli_path = argv[1];
  const fs::path scratch = argv[2];
  fs::create_directories(scratch);

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "attenuation oracle", 1.0, attenuation},
      {2, "volume-curve endpoints", 10.0, volume_endpoints},
      {3, "RAID-5 state machine", 5.0, raid_state_machine},
      {4, "HDFS cascade", 5.0, hdfs_cascade},
      {5, "DB latency table", 1.0, db_latency},
      {6, "VM migration", 30.0, vm_migration},
      {7, "cache latency bands", 10.0, cache_bands},
      {8, "detector", 60.0, detector},
      {9, "determinism", 10.0, [&] { return determinism(cli_path, scratch); }},
      {10, "physics unit suite", 1.0, physics},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (s > c.budget_s) {
      o.pass = false;
      o.detail += fmt::format("; over the {:.0f} s budget", c.budget_s);
    }
    failed += o.pass ? 0 : 1;
    std::cout << fmt::format("{} {:>2} {}: {} [{:.2f} s]", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail, s)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size()) << std::endl;
  return failed == 0 ? 0 : 1;
}
