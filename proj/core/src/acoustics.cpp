#include "udcsim/acoustics.hpp"

#include <algorithm>
#include <numbers>

#include <fmt/format.h>

#include "udcsim/error.hpp"

namespace udc::acoustics {

namespace {

constexpr double kUnitTolerance = 1e-9;

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

VolumeSchedule::VolumeSchedule() : steps_{ScheduleStep{0.0, 0.0, true}} {}

VolumeSchedule::VolumeSchedule(std::vector<ScheduleStep> steps) : steps_(std::move(steps)) {
  if (steps_.empty()) throw ConfigError("volume schedule: no steps");
  if (steps_.front().start_s != 0.0) throw ConfigError("volume schedule: first step must start at 0");
  for (std::size_t i = 1; i < steps_.size(); ++i) {
    if (!(steps_[i].start_s > steps_[i - 1].start_s)) {
      throw ConfigError("volume schedule: step start times must be strictly increasing");
    }
  }
}

VolumeSchedule VolumeSchedule::staircase(double step_db, double period_s, int steps,
                                         std::optional<double> stop_s) {
  if (period_s <= 0.0) throw ConfigError("volume schedule: period must be positive");
  if (steps < 1) throw ConfigError("volume schedule: need at least one step");
  std::vector<ScheduleStep> out;
  for (int i = 0; i < steps; ++i) {
    const double start = i * period_s;
    if (stop_s && start >= *stop_s) break;
    out.push_back(ScheduleStep{start, i * step_db, true});
  }
  if (stop_s) {
    if (*stop_s <= 0.0) {
      out.assign(1, ScheduleStep{0.0, 0.0, false});
    } else {
      out.push_back(ScheduleStep{*stop_s, out.back().offset_db, false});
    }
  }
  return VolumeSchedule(std::move(out));
}

const ScheduleStep& VolumeSchedule::at(double t) const {
  auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                             [](double v, const ScheduleStep& s) { return v < s.start_s; });
  if (it == steps_.begin()) return steps_.front();
  return *(it - 1);
}

double AcousticSource::angular_frequency() const noexcept {
  return 2.0 * std::numbers::pi * frequency_hz;
}

double AcousticSource::waveform(double t) const {
  const auto& step = schedule.at(t);
  if (!step.active) return 0.0;
  return spl_to_pressure_upa(amplitude_spl + step.offset_db) * std::cos(angular_frequency() * t);
}

void AcousticSource::validate() const {
  require(frequency_hz > 0.0, "source: frequency_hz must be > 0");
  require(amplitude_spl >= 0.0, "source: amplitude_spl must be >= 0");
  require(orientation_deg >= 0.0 && orientation_deg <= 180.0,
          "source: orientation_deg must lie in [0, 180]");
}

double Medium::wavenumber(double angular_frequency) const {
  require(sound_speed > 0.0, "medium: sound_speed must be > 0");
  return angular_frequency / sound_speed;
}

void Medium::validate() const {
  require(density > 0.0, "medium: density must be > 0");
  require(sound_speed > 0.0, "medium: sound_speed must be > 0");
  require(attenuation_coeff >= 0.0, "medium: attenuation_coeff must be >= 0");
}

void SolidLayer::validate() const {
  require(density > 0.0, "solid layer: density must be > 0");
  require(lame_lambda > 0.0 && lame_mu > 0.0 && shear_modulus > 0.0,
          "solid layer: moduli must be > 0");
  require(acoustic_impedance > 0.0, "solid layer: acoustic_impedance must be > 0");
}

void ResonanceProfile::validate() const {
  if (bands.empty()) throw ConfigError("resonance profile: no bands");
  if (off_band_gain < 0.0 || off_band_gain > 1.0) {
    throw ConfigError("resonance profile: off_band_gain outside [0, 1]");
  }
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const auto& b = bands[i];
    if (b.gain < 0.0 || b.gain > 1.0) {
      throw ConfigError(fmt::format("resonance profile: band {} gain outside [0, 1]", i));
    }
    if (b.half_width_hz < 0.0 || b.center_hz <= 0.0) {
      throw ConfigError(fmt::format("resonance profile: band {} has invalid extent", i));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (bands[j].center_hz == b.center_hz) {
        throw ConfigError(fmt::format("resonance profile: duplicate band center {} Hz", b.center_hz));
      }
    }
  }
}

double delta_spl(double measured_spl, double noise_spl) noexcept { return measured_spl - noise_spl; }

double attenuate_amplitude(double a0, double alpha, double x) {
  require(alpha >= 0.0, "attenuate_amplitude: alpha must be >= 0");
  require(x >= 0.0, "attenuate_amplitude: distance must be >= 0");
  return a0 * std::exp(-alpha * x);
}

double attenuate_spl(double spl_db, double alpha, double x) {
  require(alpha >= 0.0, "attenuate_spl: alpha must be >= 0");
  require(x >= 0.0, "attenuate_spl: distance must be >= 0");
  return spl_db - kDbPerNeper * alpha * x;
}

double spl_to_pressure_upa(double spl_db) noexcept { return std::pow(10.0, spl_db / 20.0); }

double pressure_upa_to_spl(double pressure_upa) {
  require(pressure_upa > 0.0, "pressure must be > 0 to express as SPL");
  return 20.0 * std::log10(pressure_upa);
}

SplCurve::SplCurve(std::vector<Knot> points)
    : table_(std::move(points), "SPL-distance curve", 2) {}

double empirical_spl_at_distance(const SplCurve& curve, double distance_m) {
  return curve.at(distance_m);
}

Vec3 boundary_force(double pressure, const Vec3& normal) {
  require(std::abs(normal.norm() - 1.0) <= kUnitTolerance, "boundary_force: normal must be unit");
  return pressure * normal;
}

BoundaryLoad boundary_load(double pressure, const Vec3& normal, double fluid_density,
                           const Vec3& pressure_gradient) {
  require(fluid_density > 0.0, "boundary_load: fluid density must be > 0");
  BoundaryLoad load;
  load.pressure = pressure;
  load.surface_normal = normal;
  load.force_per_area = boundary_force(pressure, normal);
  load.solid_acceleration = (normal.dot(pressure_gradient) / fluid_density) * normal;
  return load;
}

ReflectionTransmission reflection_transmission(double z1, double z2) {
  require(z1 > 0.0 && z2 > 0.0, "reflection_transmission: impedances must be > 0");
  const double r = (z2 - z1) / (z2 + z1);
  return {r, 1.0 + r};
}

WaveSpeeds wave_speeds(const SolidLayer& layer) {
  require(layer.density > 0.0, "wave_speeds: density must be > 0");
  require(layer.shear_modulus >= 0.0, "wave_speeds: shear modulus must be >= 0");
  return {std::sqrt((layer.lame_lambda + 2.0 * layer.lame_mu) / layer.density),
          std::sqrt(layer.shear_modulus / layer.density)};
}

PiecewiseLinear make_angle_table(std::vector<Knot> knots) {
  PiecewiseLinear table(std::move(knots), "angle table", 1);
  bool has_reference = false;
  for (const auto& k : table.knots()) {
    if (k.x == 0.0 && k.y == 1.0) has_reference = true;
    if (k.y <= 0.0 || k.y > 1.0) throw ConfigError("angle table: factors must lie in (0, 1]");
  }
  if (!has_reference) throw ConfigError("angle table: must map 0 deg to factor 1.0");
  return table;
}

double angle_factor(double orientation_deg, const PiecewiseLinear& table) {
  return std::clamp(table(orientation_deg), 0.0, 1.0);
}

double resonance_gain(double frequency_hz, const ResonanceProfile& profile) {
  require(frequency_hz > 0.0, "resonance_gain: frequency must be > 0");
  std::optional<double> best;
  for (const auto& band : profile.bands) {
    if (frequency_hz >= band.center_hz - band.half_width_hz &&
        frequency_hz <= band.center_hz + band.half_width_hz) {
      best = std::max(best.value_or(0.0), band.gain);
    }
  }
  return std::clamp(best.value_or(profile.off_band_gain), 0.0, 1.0);
}

namespace {

double spl_at_target(double source_spl, const ExcitationContext& ctx, double distance_m) {
  const double level = ctx.empirical_loss
                           ? source_spl - ctx.empirical_loss->loss_db(distance_m)
                           : attenuate_spl(source_spl, ctx.medium.attenuation_coeff, distance_m);
  return level - ctx.passive_attenuation_db;
}

}  // namespace

EffectiveExcitation effective_excitation(const AcousticSource& src, const ExcitationContext& ctx,
                                         double distance_m, double position_factor, double t) {
  src.validate();
  ctx.medium.validate();
  require(distance_m >= 0.0, "effective_excitation: distance must be >= 0");
  require(position_factor > 0.0 && position_factor <= 1.0,
          "effective_excitation: position factor must lie in (0, 1]");

  EffectiveExcitation out;
  out.combined_factor = resonance_gain(src.frequency_hz, ctx.resonance) *
                        angle_factor(src.orientation_deg, ctx.angle_table) * position_factor;

  const auto& step = src.schedule.at(t);
  if (!step.active) {
    out.delta_spl = 0.0;
    out.displacement_nm = 0.0;
    return out;
  }
  const double level = spl_at_target(src.amplitude_spl + step.offset_db, ctx, distance_m);
  out.delta_spl = delta_spl(level, ctx.medium.noise_floor_spl);
  out.displacement_nm =
      ctx.displacement.displacement_nm * std::pow(10.0, (level - ctx.displacement.spl_db) / 20.0);
  return out;
}

double source_spl_for_delta(double target_delta_spl, const ExcitationContext& ctx,
                            double distance_m) {
  const double loss = ctx.empirical_loss
                          ? ctx.empirical_loss->loss_db(distance_m)
                          : kDbPerNeper * ctx.medium.attenuation_coeff * distance_m;
  return ctx.medium.noise_floor_spl + target_delta_spl + loss + ctx.passive_attenuation_db;
}

}  // namespace udc::acoustics
