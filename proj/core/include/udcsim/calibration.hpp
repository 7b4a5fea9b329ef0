#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "udcsim/acoustics.hpp"
#include "udcsim/distsys.hpp"
#include "udcsim/interp.hpp"
#include "udcsim/storage.hpp"

namespace udc {

enum class Environment { kLab, kOpenWater };
std::string_view to_string(Environment e) noexcept;
std::optional<Environment> parse_environment(std::string_view text) noexcept;

struct EnvironmentCalibration {
  acoustics::Medium medium;
  std::vector<Knot> spl_distance;  // (m, dB re 1 uPa) for the reference source
  storage::DegradationCurve write_curve;
  std::optional<storage::DegradationCurve> read_curve;
  double reference_distance_m = 0.06;
};

struct DiskDefaults {
  double baseline_throughput = 100.0;
  double unresponsive_threshold_db = 36.0;
  double threshold_jitter_db = 1.0;  // seeded, uniform in +-jitter
  double unresponsive_dwell_s = 60.0;
  double permanent_damage_rate = 0.0;
};

struct Calibration {
  EnvironmentCalibration lab;
  EnvironmentCalibration open_water;
  acoustics::ResonanceProfile resonance;
  std::vector<Knot> angle_table;
  std::map<int, double> position_factors;  // injection location -> factor
  std::vector<Knot> pes_curve;
  acoustics::DisplacementReference displacement;
  DiskDefaults disk;
  storage::Raid5Config raid;
  double noise_sigma_fraction = 0.03;
  storage::CacheConfig cache;  // cache_size_gb is chosen per run
  distsys::DbCluster db;
  distsys::VmInflationModel vm;
  // Entries read off plots rather than stated numerically.
  std::vector<std::string> figure_derived;

  const EnvironmentCalibration& environment(Environment e) const {
    return e == Environment::kLab ? lab : open_water;
  }
  double position_factor(int location) const;
  acoustics::ExcitationContext excitation_context(Environment e, bool empirical_loss = true) const;

  void validate() const;
};

// Compiled-in defaults; calibration/default.json is a serialization of these.
Calibration default_calibration();

// Sections missing from the file keep their defaults. Every problem found
// is reported at once through ConfigErrors.
Calibration parse_calibration(const std::string& json_text, const std::string& origin = "calibration");
Calibration load_calibration(const std::filesystem::path& path);
std::string calibration_to_json(const Calibration& cal);

// --calibration flag, else $UDCSIM_CALIBRATION, else the compiled-in defaults.
Calibration resolve_calibration(const std::optional<std::filesystem::path>& flag);

}  // namespace udc
