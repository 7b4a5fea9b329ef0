#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "udcsim/workload.hpp"

namespace udc::detector {

struct Curve {
  std::vector<double> t;
  std::vector<double> y;

  std::size_t size() const noexcept { return t.size(); }
  static Curve from_trace(const workload::ThroughputTrace& trace);
};

enum class Normalization {
  kReferenceRange,  // offset and scale both axes by the reference's ranges
  kNone,
};

struct PcmConfig {
  // Candidate segments are subdivided until at least this many points are
  // mapped. Subdivision keeps the polyline, so exact areas are preserved.
  std::size_t resample_count = 64;
  Normalization normalization = Normalization::kReferenceRange;

  void validate() const;
};

// Partial curve mapping: both curves are normalized by the reference, each
// candidate point is paired with the reference point at the same fraction of
// arc length, and the areas of the quadrilaterals between consecutive pairs
// are summed.
double pcm_distance(const Curve& candidate, const Curve& reference, const PcmConfig& cfg = {});
double pcm_distance(const workload::ThroughputTrace& candidate,
                    const workload::ThroughputTrace& reference, const PcmConfig& cfg = {});

struct DiskProfile {
  std::string disk_id;
  std::vector<workload::ThroughputTrace> traces;
  workload::ThroughputTrace centroid;  // pointwise mean
  std::vector<double> dispersion;      // pointwise standard deviation
  // Distance of every profiling trace to the centroid.
  std::vector<double> calibration_distances;
  // Set when the traces are not sequential-write, the only workload the
  // default detector thresholds were tuned on.
  bool uncalibrated_workload = false;
};

// Throws ValidationError for fewer than two traces or mismatched shapes.
DiskProfile profile_disk(std::string disk_id, std::vector<workload::ThroughputTrace> traces,
                         const PcmConfig& cfg = {});

struct KMeansConfig {
  int max_iterations = 100;
  double tolerance = 1e-9;
};

struct KMeansResult {
  std::array<double, 2> centroids{};  // centroids[0] <= centroids[1]
  std::vector<int> labels;            // 0: low cluster, 1: high cluster
  int iterations = 0;
  bool degenerate = false;            // all values equal
};

// One-dimensional k-means with k = 2, initialized at the min and max.
KMeansResult kmeans2(std::span<const double> values, const KMeansConfig& cfg = {});

enum class Label { kBenign, kAnomalous };
std::string_view to_string(Label l) noexcept;

struct DetectorConfig {
  PcmConfig pcm;
  KMeansConfig kmeans;
  int alarm_min_disks = 3;
  // A split that puts more than this share of the known-benign calibration
  // distances in the high cluster is not an attack signature; every disk is
  // then labeled benign.
  double max_calibration_fraction = 0.01;

  void validate() const;
};

struct Verdict {
  std::vector<std::string> disk_ids;
  std::vector<Label> labels;
  std::vector<double> distances;
  bool alarm = false;

  int anomalous_count() const noexcept;
};

// One trace per profile, in profile order.
Verdict classify_disks(std::span<const workload::ThroughputTrace> traces,
                       std::span<const DiskProfile> profiles, const DetectorConfig& cfg = {});

struct Pools {
  std::vector<std::vector<workload::ThroughputTrace>> benign;    // per disk
  std::vector<std::vector<workload::ThroughputTrace>> attacked;  // per disk
};

struct RateEstimate {
  std::size_t positives = 0;  // ground-truth attack combinations
  std::size_t negatives = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;

  std::optional<double> tpr() const;
  std::optional<double> fpr() const;
};

struct Evaluation {
  std::size_t combinations = 0;
  // Attack iff at least alarm_min_disks disks received attacked traces.
  RateEstimate majority;
  // Attack iff any disk received an attacked trace.
  RateEstimate any_attacked;
};

// Each combination draws, per disk, an attacked trace with probability 1/2
// (when that disk has an attacked pool) and a benign one otherwise. Trial i
// uses its own stream derived from (seed, i), so trials are order-free.
Evaluation evaluate(std::span<const DiskProfile> profiles, const Pools& pools,
                    std::size_t combinations, std::uint64_t seed, const DetectorConfig& cfg = {});

// Profile store: <dir>/manifest.json plus <dir>/<disk>/<nnn>.csv traces.
void save_profiles(const std::filesystem::path& dir, std::span<const DiskProfile> profiles);
std::vector<DiskProfile> load_profiles(const std::filesystem::path& dir, const PcmConfig& cfg = {});

}  // namespace udc::detector
