#pragma once

// Analytic circular-orbit constellation: Walker-delta shells propagated in an
// Earth-centred inertial frame and rotated into ECEF. Spherical Earth, no
// perturbations.

#include <cmath>
#include <span>
#include <vector>

namespace leoho {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kEarthMuKm3PerS2 = 398600.4418;
inline constexpr double kEarthRotationRadPerS = 7.2921159e-5;
inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double k) const { return {x * k, y * k, z * k}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

struct OrbitalShell {
  double altitude_km = 0.0;
  double inclination_deg = 0.0;
  int plane_count = 0;
  int sats_per_plane = 0;
  // In-plane phase shift between adjacent planes (Walker F * 360 / T).
  double phasing_offset_deg = 0.0;
  // Angular span over which the plane RAANs are spread.
  double raan_spread_deg = 360.0;

  int satellite_count() const { return plane_count * sats_per_plane; }
  double radius_km() const { return kEarthRadiusKm + altitude_km; }
};

struct ConstellationSpec {
  std::vector<OrbitalShell> shells;
  double min_elevation_deg = 20.0;
  double slot_seconds = 10.0;

  int satellite_count() const;
  // Throws ConfigError on an empty spec or an invalid shell.
  void validate() const;
};

// Two shells totalling 298 satellites: 6x13 polar at 1015 km plus 20x11 inclined at 1325 km.
ConstellationSpec telesat_like_spec();

struct SatelliteState {
  int sat_id = 0;
  Vec3 position_ecef_km;
  int epoch_slot = 0;
};

struct GroundUser {
  int user_id = 0;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;

  Vec3 position_ecef_km() const;
};

struct VisibilityRecord {
  int sat_id = 0;
  double elevation_deg = 0.0;
  double slant_range_km = 0.0;
  int remaining_visible_slots = 0;
};

// Elevation above the user's local horizon, in [-90, 90] degrees.
double elevation_angle_deg(const SatelliteState& sat, const GroundUser& user);
double slant_range_km(const SatelliteState& sat, const GroundUser& user);

// Geometric filter only: satellites at or above min_elevation_deg, sorted by
// sat_id. remaining_visible_slots is 1 (the current slot); use
// Constellation::candidate_set for lookahead-filled records.
std::vector<VisibilityRecord> visible_satellites(const GroundUser& user,
                                                 std::span<const SatelliteState> sats,
                                                 double min_elevation_deg);

class Constellation {
 public:
  explicit Constellation(ConstellationSpec spec);

  const ConstellationSpec& spec() const { return spec_; }
  int size() const { return static_cast<int>(orbits_.size()); }

  Vec3 inertial_position_km(int sat_id, double t_seconds) const;
  Vec3 ecef_position_km(int sat_id, double t_seconds) const;
  SatelliteState state(int sat_id, int slot) const;
  std::vector<SatelliteState> propagate(int slot) const;

  double orbital_period_s(int sat_id) const;
  double shell_radius_km(int sat_id) const;

  // Satellites above the spec's minimum elevation at `slot`, sorted by sat_id,
  // with remaining_visible_slots looked ahead up to horizon_slots.
  std::vector<VisibilityRecord> candidate_set(const GroundUser& user, int slot,
                                              int horizon_slots) const;

  // Consecutive slots from `slot` (inclusive) with elevation >= minimum,
  // capped at horizon_slots. Zero if not visible now.
  int remaining_visibility(const GroundUser& user, int sat_id, int slot, int horizon_slots) const;

 private:
  struct Orbit {
    double radius_km;
    double inclination_rad;
    double raan_rad;
    double phase0_rad;
    double mean_motion_rad_s;
  };

  void check_id(int sat_id) const;

  ConstellationSpec spec_;
  std::vector<Orbit> orbits_;
};

std::vector<SatelliteState> propagate(const ConstellationSpec& spec, int slot, double slot_seconds);

}  // namespace leoho
