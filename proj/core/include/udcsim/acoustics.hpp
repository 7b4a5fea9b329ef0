#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "udcsim/interp.hpp"

// Sound propagation from an underwater source to a solid target, reduced to
// the two quantities the storage models consume: the level above the noise
// floor at the target and a scalar vibration displacement.
namespace udc::acoustics {

// 20*log10(e): decibels per neper under the amplitude convention.
inline constexpr double kDbPerNeper = 8.685889638065036;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
  double dot(const Vec3& o) const noexcept { return x * o.x + y * o.y + z * o.z; }

  friend Vec3 operator*(double s, const Vec3& v) noexcept { return {s * v.x, s * v.y, s * v.z}; }
  friend Vec3 operator-(const Vec3& v) noexcept { return {-v.x, -v.y, -v.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) noexcept {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct ScheduleStep {
  double start_s = 0.0;
  double offset_db = 0.0;
  bool active = true;  // false: source silent from start_s
};

// Piecewise-constant SPL offset over time; the first step starts at 0.
class VolumeSchedule {
 public:
  VolumeSchedule();  // constant 0 dB, active
  explicit VolumeSchedule(std::vector<ScheduleStep> steps);

  // `steps` increments of `step_db`, each held for `period_s`, starting at
  // offset 0. If `stop_s` is given the source goes silent from then on.
  static VolumeSchedule staircase(double step_db, double period_s, int steps,
                                  std::optional<double> stop_s = std::nullopt);

  const ScheduleStep& at(double t) const;
  double offset_db(double t) const { return at(t).offset_db; }
  bool active(double t) const { return at(t).active; }

  const std::vector<ScheduleStep>& steps() const noexcept { return steps_; }

 private:
  std::vector<ScheduleStep> steps_;
};

struct AcousticSource {
  double amplitude_spl = 0.0;  // dB re 1 uPa at the source reference point
  double frequency_hz = 5100.0;
  Vec3 position;
  double orientation_deg = 0.0;  // speaker axis vs target normal
  VolumeSchedule schedule;

  double angular_frequency() const noexcept;
  // Injected tone s(t) = A cos(w t), A the pressure amplitude in uPa for
  // the schedule-adjusted level.
  double waveform(double t) const;
  void validate() const;
};

struct Medium {
  double density = 1000.0;           // kg/m^3
  double sound_speed = 1480.0;       // m/s
  double attenuation_coeff = 0.0;    // Np/m
  double noise_floor_spl = 116.0;    // dB re 1 uPa
  double salinity_psu = 0.0;         // metadata only
  double temperature_c = 20.0;       // metadata only

  double wavenumber(double angular_frequency) const;
  double impedance() const noexcept { return density * sound_speed; }
  void validate() const;
};

struct SolidLayer {
  double density = 0.0;       // kg/m^3
  double lame_lambda = 0.0;   // Pa
  double lame_mu = 0.0;       // Pa
  double shear_modulus = 0.0; // Pa
  double acoustic_impedance = 0.0;  // Pa*s/m

  void validate() const;
};

struct BoundaryLoad {
  double pressure = 0.0;
  Vec3 surface_normal;
  Vec3 force_per_area;
  Vec3 solid_acceleration;
};

struct ResonanceBand {
  double center_hz = 0.0;
  double half_width_hz = 0.0;
  double gain = 1.0;
};

struct ResonanceProfile {
  std::vector<ResonanceBand> bands;
  double off_band_gain = 0.0;

  void validate() const;
};

struct EffectiveExcitation {
  double delta_spl = 0.0;        // dB above the noise floor, may be negative
  double displacement_nm = 0.0;
  double combined_factor = 1.0;  // resonance x angle x position, in [0, 1]
};

// Scalar displacement scaling: `displacement_nm` at `spl_db`, proportional
// to pressure amplitude elsewhere.
struct DisplacementReference {
  double displacement_nm = 145.5;
  double spl_db = 220.0;
};

struct WaveSpeeds {
  double longitudinal = 0.0;
  double shear = 0.0;
};

struct ReflectionTransmission {
  double reflection = 0.0;
  double transmission = 0.0;
};

double delta_spl(double measured_spl, double noise_spl) noexcept;

double attenuate_amplitude(double a0, double alpha, double x);
double attenuate_spl(double spl_db, double alpha, double x);

// Linear pressure amplitude in uPa for a level in dB re 1 uPa, and back.
double spl_to_pressure_upa(double spl_db) noexcept;
double pressure_upa_to_spl(double pressure_upa);

// Measured SPL-vs-distance calibration, interpolated in (m, dB).
class SplCurve {
 public:
  explicit SplCurve(std::vector<Knot> points);
  double at(double distance_m) const { return table_(distance_m); }
  // Loss relative to the first calibration point.
  double loss_db(double distance_m) const { return table_.knots().front().y - at(distance_m); }
  const PiecewiseLinear& table() const noexcept { return table_; }

 private:
  PiecewiseLinear table_;
};

double empirical_spl_at_distance(const SplCurve& curve, double distance_m);

Vec3 boundary_force(double pressure, const Vec3& normal);

// Fluid load plus the normal solid acceleration implied by the pressure
// gradient at the wetted surface: (n . grad p) / rho along n.
BoundaryLoad boundary_load(double pressure, const Vec3& normal, double fluid_density,
                           const Vec3& pressure_gradient);

ReflectionTransmission reflection_transmission(double z1, double z2);

WaveSpeeds wave_speeds(const SolidLayer& layer);

// Angle table must contain 0 deg with factor 1.
PiecewiseLinear make_angle_table(std::vector<Knot> knots);
double angle_factor(double orientation_deg, const PiecewiseLinear& table);

double resonance_gain(double frequency_hz, const ResonanceProfile& profile);

struct ExcitationContext {
  Medium medium;
  ResonanceProfile resonance;
  PiecewiseLinear angle_table;
  DisplacementReference displacement;
  std::optional<SplCurve> empirical_loss;  // replaces the analytic loss when set
  double passive_attenuation_db = 0.0;     // absorptive lining, if any
};

EffectiveExcitation effective_excitation(const AcousticSource& src, const ExcitationContext& ctx,
                                         double distance_m, double position_factor, double t);

// Source level needed to produce `target_delta_spl` at `distance_m`.
double source_spl_for_delta(double target_delta_spl, const ExcitationContext& ctx,
                            double distance_m);

}  // namespace udc::acoustics
