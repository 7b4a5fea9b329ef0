#include "udcsim/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "udcsim/error.hpp"

namespace udc::detector {

Curve Curve::from_trace(const workload::ThroughputTrace& trace) {
  Curve c;
  c.t.reserve(trace.samples.size());
  c.y.reserve(trace.samples.size());
  for (const auto& s : trace.samples) {
    c.t.push_back(s.t);
    c.y.push_back(s.mb_s);
  }
  return c;
}

void PcmConfig::validate() const {
  if (resample_count < 8) throw ConfigError("pcm: resample_count must be >= 8");
}

namespace {

struct Pt {
  double x;
  double y;
};

void check_curve(const Curve& c, const char* which) {
  if (c.t.size() != c.y.size()) {
    throw ValidationError(fmt::format("pcm: {} has mismatched t/y lengths", which));
  }
  if (c.t.size() < 2) throw ValidationError(fmt::format("pcm: {} needs at least 2 points", which));
  for (std::size_t i = 1; i < c.t.size(); ++i) {
    if (c.t[i] < c.t[i - 1]) throw ValidationError(fmt::format("pcm: {} time goes backwards", which));
  }
}

std::vector<Pt> normalize(const Curve& c, double t0, double t_scale, double y0, double y_scale) {
  std::vector<Pt> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    out[i] = {(c.t[i] - t0) / t_scale, (c.y[i] - y0) / y_scale};
  }
  return out;
}

// Cumulative arc length normalized to [0, 1]; all zeros for a point curve.
std::vector<double> arc_fractions(const std::vector<Pt>& p) {
  std::vector<double> s(p.size(), 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) {
    s[i] = s[i - 1] + std::hypot(p[i].x - p[i - 1].x, p[i].y - p[i - 1].y);
  }
  const double total = s.back();
  if (total > 0.0) {
    for (auto& v : s) v /= total;
  }
  return s;
}

Pt at_fraction(const std::vector<Pt>& p, const std::vector<double>& s, double f) {
  if (f <= s.front()) return p.front();
  if (f >= s.back()) return p.back();
  const auto it = std::upper_bound(s.begin(), s.end(), f);
  const auto i = static_cast<std::size_t>(it - s.begin());
  const double span = s[i] - s[i - 1];
  const double w = span > 0.0 ? (f - s[i - 1]) / span : 0.0;
  return {p[i - 1].x + w * (p[i].x - p[i - 1].x), p[i - 1].y + w * (p[i].y - p[i - 1].y)};
}

double quad_area(const Pt& a, const Pt& b, const Pt& c, const Pt& d) {
  const double twice = (a.x * b.y - b.x * a.y) + (b.x * c.y - c.x * b.y) +
                       (c.x * d.y - d.x * c.y) + (d.x * a.y - a.x * d.y);
  return 0.5 * std::abs(twice);
}

}  // namespace

double pcm_distance(const Curve& candidate, const Curve& reference, const PcmConfig& cfg) {
  cfg.validate();
  check_curve(candidate, "candidate");
  check_curve(reference, "reference");
  if (candidate.t == reference.t && candidate.y == reference.y) return 0.0;

  double t0 = 0.0, t_scale = 1.0, y0 = 0.0, y_scale = 1.0;
  if (cfg.normalization == Normalization::kReferenceRange) {
    t0 = reference.t.front();
    const double span = reference.t.back() - reference.t.front();
    if (span > 0.0) t_scale = span;
    const auto [lo, hi] = std::minmax_element(reference.y.begin(), reference.y.end());
    y0 = *lo;
    if (*hi - *lo > 0.0) y_scale = *hi - *lo;
  }
  const auto ref = normalize(reference, t0, t_scale, y0, y_scale);
  const auto raw = normalize(candidate, t0, t_scale, y0, y_scale);

  const std::size_t segments = raw.size() - 1;
  const std::size_t pieces = std::max<std::size_t>(1, (cfg.resample_count - 1 + segments - 1) / segments);
  std::vector<Pt> cand;
  cand.reserve(segments * pieces + 1);
  for (std::size_t i = 0; i < segments; ++i) {
    for (std::size_t k = 0; k < pieces; ++k) {
      const double w = static_cast<double>(k) / static_cast<double>(pieces);
      cand.push_back({raw[i].x + w * (raw[i + 1].x - raw[i].x), raw[i].y + w * (raw[i + 1].y - raw[i].y)});
    }
  }
  cand.push_back(raw.back());

  const auto s_ref = arc_fractions(ref);
  const auto s_cand = arc_fractions(cand);
  std::vector<Pt> mapped(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) mapped[i] = at_fraction(ref, s_ref, s_cand[i]);

  double area = 0.0;
  for (std::size_t i = 0; i + 1 < cand.size(); ++i) {
    area += quad_area(cand[i], cand[i + 1], mapped[i + 1], mapped[i]);
  }
  return area;
}

double pcm_distance(const workload::ThroughputTrace& candidate,
                    const workload::ThroughputTrace& reference, const PcmConfig& cfg) {
  return pcm_distance(Curve::from_trace(candidate), Curve::from_trace(reference), cfg);
}

DiskProfile profile_disk(std::string disk_id, std::vector<workload::ThroughputTrace> traces,
                         const PcmConfig& cfg) {
  if (traces.size() < 2) {
    throw ValidationError(fmt::format("profile {}: need at least 2 traces, got {}", disk_id, traces.size()));
  }
  const auto& first = traces.front();
  const std::size_t n = first.samples.size();
  if (n < 2) throw ValidationError(fmt::format("profile {}: traces need at least 2 samples", disk_id));
  for (std::size_t k = 1; k < traces.size(); ++k) {
    const auto& tr = traces[k];
    if (tr.samples.size() != n || tr.sample_period_s != first.sample_period_s) {
      throw ValidationError(fmt::format("profile {}: trace {} differs in shape", disk_id, k));
    }
  }

  DiskProfile p;
  p.disk_id = std::move(disk_id);
  p.centroid.sample_period_s = first.sample_period_s;
  p.centroid.labels["disk"] = p.disk_id;
  p.centroid.labels["kind"] = "centroid";
  p.centroid.samples.resize(n);
  p.dispersion.assign(n, 0.0);
  const double count = static_cast<double>(traces.size());
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& tr : traces) sum += tr.samples[i].mb_s;
    const double mean = sum / count;
    double sq = 0.0;
    for (const auto& tr : traces) sq += (tr.samples[i].mb_s - mean) * (tr.samples[i].mb_s - mean);
    p.centroid.samples[i] = {first.samples[i].t, mean};
    p.dispersion[i] = std::sqrt(sq / count);
  }
  for (const auto& tr : traces) {
    auto it = tr.labels.find("workload");
    if (it != tr.labels.end() && it->second != to_string(WorkloadKind::kSequentialWrite)) {
      p.uncalibrated_workload = true;
    }
  }
  if (p.uncalibrated_workload) p.centroid.labels["uncalibrated"] = "workload";
  p.calibration_distances.reserve(traces.size());
  for (const auto& tr : traces) p.calibration_distances.push_back(pcm_distance(tr, p.centroid, cfg));
  p.traces = std::move(traces);
  return p;
}

KMeansResult kmeans2(std::span<const double> values, const KMeansConfig& cfg) {
  KMeansResult r;
  r.labels.assign(values.size(), 0);
  if (values.empty()) {
    r.degenerate = true;
    return r;
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  r.centroids = {*lo, *hi};
  if (!(*hi > *lo)) {
    r.degenerate = true;
    return r;
  }
  for (r.iterations = 1; r.iterations <= cfg.max_iterations; ++r.iterations) {
    std::array<double, 2> sum{0.0, 0.0};
    std::array<std::size_t, 2> count{0, 0};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = values[i];
      const int c = std::abs(v - r.centroids[1]) < std::abs(v - r.centroids[0]) ? 1 : 0;
      r.labels[i] = c;
      sum[c] += v;
      ++count[c];
    }
    std::array<double, 2> next = r.centroids;
    for (int c = 0; c < 2; ++c) {
      if (count[c] > 0) next[c] = sum[c] / static_cast<double>(count[c]);
    }
    const double shift = std::max(std::abs(next[0] - r.centroids[0]), std::abs(next[1] - r.centroids[1]));
    r.centroids = next;
    if (shift <= cfg.tolerance) break;
  }
  r.iterations = std::min(r.iterations, cfg.max_iterations);
  return r;
}

std::string_view to_string(Label l) noexcept {
  return l == Label::kBenign ? "benign" : "anomalous";
}

void DetectorConfig::validate() const {
  pcm.validate();
  if (kmeans.max_iterations < 1) throw ConfigError("detector: k-means needs at least one iteration");
  if (kmeans.tolerance < 0.0) throw ConfigError("detector: k-means tolerance must be >= 0");
  if (alarm_min_disks < 1) throw ConfigError("detector: alarm_min_disks must be >= 1");
  if (max_calibration_fraction < 0.0 || max_calibration_fraction > 1.0) {
    throw ConfigError("detector: max_calibration_fraction outside [0, 1]");
  }
}

int Verdict::anomalous_count() const noexcept {
  return static_cast<int>(std::count(labels.begin(), labels.end(), Label::kAnomalous));
}

Verdict classify_disks(std::span<const workload::ThroughputTrace> traces,
                       std::span<const DiskProfile> profiles, const DetectorConfig& cfg) {
  cfg.validate();
  if (traces.size() != profiles.size()) {
    throw ValidationError(fmt::format("classify: {} traces for {} profiled disks", traces.size(),
                                      profiles.size()));
  }
  Verdict v;
  v.labels.assign(traces.size(), Label::kBenign);
  std::vector<double> pooled;
  for (const auto& p : profiles) {
    pooled.insert(pooled.end(), p.calibration_distances.begin(), p.calibration_distances.end());
  }
  const std::size_t calibration = pooled.size();
  for (std::size_t i = 0; i < traces.size(); ++i) {
    v.disk_ids.push_back(profiles[i].disk_id);
    v.distances.push_back(pcm_distance(traces[i], profiles[i].centroid, cfg.pcm));
    pooled.push_back(v.distances.back());
  }

  const auto km = kmeans2(pooled, cfg.kmeans);
  if (!km.degenerate) {
    std::size_t contaminated = 0;
    for (std::size_t i = 0; i < calibration; ++i) contaminated += km.labels[i] == 1 ? 1 : 0;
    const bool meaningful =
        calibration == 0 ||
        static_cast<double>(contaminated) <= cfg.max_calibration_fraction * static_cast<double>(calibration);
    if (meaningful) {
      for (std::size_t i = 0; i < traces.size(); ++i) {
        if (km.labels[calibration + i] == 1) v.labels[i] = Label::kAnomalous;
      }
    }
  }
  v.alarm = v.anomalous_count() >= cfg.alarm_min_disks;
  return v;
}

std::optional<double> RateEstimate::tpr() const {
  if (positives == 0) return std::nullopt;
  return static_cast<double>(true_positives) / static_cast<double>(positives);
}

std::optional<double> RateEstimate::fpr() const {
  if (negatives == 0) return std::nullopt;
  return static_cast<double>(false_positives) / static_cast<double>(negatives);
}

namespace {

void tally(RateEstimate& r, bool truth, bool alarm) {
  if (truth) {
    ++r.positives;
    r.true_positives += alarm ? 1 : 0;
  } else {
    ++r.negatives;
    r.false_positives += alarm ? 1 : 0;
  }
}

}  // namespace

Evaluation evaluate(std::span<const DiskProfile> profiles, const Pools& pools,
                    std::size_t combinations, std::uint64_t seed, const DetectorConfig& cfg) {
  cfg.validate();
  const std::size_t disks = profiles.size();
  if (pools.benign.size() != disks) throw ValidationError("evaluate: one benign pool per disk required");
  if (!pools.attacked.empty() && pools.attacked.size() != disks) {
    throw ValidationError("evaluate: attacked pools must be empty or one per disk");
  }
  for (std::size_t d = 0; d < disks; ++d) {
    if (pools.benign[d].empty()) throw ValidationError("evaluate: empty benign pool for " + profiles[d].disk_id);
  }

  Evaluation ev;
  ev.combinations = combinations;
  std::vector<workload::ThroughputTrace> chosen(disks);
  for (std::size_t i = 0; i < combinations; ++i) {
    auto rng = engine::derive_rng(seed, "detector/combination", i);
    int attacked = 0;
    for (std::size_t d = 0; d < disks; ++d) {
      const bool has_attack = !pools.attacked.empty() && !pools.attacked[d].empty();
      const bool attack = rng.bernoulli(0.5) && has_attack;
      const auto& pool = attack ? pools.attacked[d] : pools.benign[d];
      chosen[d] = pool[rng.below(pool.size())];
      attacked += attack ? 1 : 0;
    }
    const bool alarm = classify_disks(chosen, profiles, cfg).alarm;
    tally(ev.majority, attacked >= cfg.alarm_min_disks, alarm);
    tally(ev.any_attacked, attacked > 0, alarm);
  }
  return ev;
}

void save_profiles(const std::filesystem::path& dir, std::span<const DiskProfile> profiles) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "udcsim-profiles";
  manifest["version"] = 1;
  manifest["disks"] = nlohmann::json::array();
  for (const auto& p : profiles) {
    fs::create_directories(dir / p.disk_id);
    nlohmann::json entry;
    entry["id"] = p.disk_id;
    entry["sample_period_s"] = p.centroid.sample_period_s;
    entry["traces"] = nlohmann::json::array();
    for (std::size_t k = 0; k < p.traces.size(); ++k) {
      const std::string rel = fmt::format("{}/{:03d}.csv", p.disk_id, k);
      p.traces[k].save(dir / rel);
      entry["traces"].push_back(rel);
    }
    manifest["disks"].push_back(entry);
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

std::vector<DiskProfile> load_profiles(const std::filesystem::path& dir, const PcmConfig& cfg) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (manifest.value("format", std::string{}) != "udcsim-profiles") {
    throw ConfigError(path.string() + ": not a profile manifest");
  }
  std::vector<DiskProfile> out;
  for (const auto& entry : manifest.at("disks")) {
    std::vector<workload::ThroughputTrace> traces;
    for (const auto& rel : entry.at("traces")) traces.push_back(workload::ThroughputTrace::load(dir / rel.get<std::string>()));
    out.push_back(profile_disk(entry.at("id").get<std::string>(), std::move(traces), cfg));
  }
  return out;
}

}  // namespace udc::detector
