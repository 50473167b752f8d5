#include "leoho/constellation.hpp"

#include <algorithm>
#include <string>

#include "leoho/error.hpp"

namespace leoho {

int ConstellationSpec::satellite_count() const {
  int n = 0;
  for (const auto& s : shells) n += s.satellite_count();
  return n;
}

void ConstellationSpec::validate() const {
  if (shells.empty()) throw ConfigError("constellation has no shells");
  for (std::size_t i = 0; i < shells.size(); ++i) {
    const auto& s = shells[i];
    const std::string where = "shell " + std::to_string(i) + ": ";
    if (!(s.altitude_km > 0.0)) throw ConfigError(where + "altitude_km must be > 0");
    if (s.inclination_deg < 0.0 || s.inclination_deg > 180.0)
      throw ConfigError(where + "inclination_deg must lie in [0, 180]");
    if (s.plane_count <= 0 || s.sats_per_plane <= 0)
      throw ConfigError(where + "plane_count and sats_per_plane must be positive");
  }
  if (min_elevation_deg < 0.0 || min_elevation_deg >= 90.0)
    throw ConfigError("min_elevation_deg must lie in [0, 90)");
  if (!(slot_seconds > 0.0)) throw ConfigError("slot_seconds must be > 0");
}

ConstellationSpec telesat_like_spec() {
  ConstellationSpec spec;
  spec.shells.push_back({1015.0, 99.5, 6, 13, 360.0 / 78.0, 180.0});
  spec.shells.push_back({1325.0, 50.88, 20, 11, 360.0 / 220.0 * 7.0, 360.0});
  return spec;
}

Vec3 GroundUser::position_ecef_km() const {
  const double lat = deg2rad(latitude_deg);
  const double lon = deg2rad(longitude_deg);
  return {kEarthRadiusKm * std::cos(lat) * std::cos(lon),
          kEarthRadiusKm * std::cos(lat) * std::sin(lon), kEarthRadiusKm * std::sin(lat)};
}

double slant_range_km(const SatelliteState& sat, const GroundUser& user) {
  return (sat.position_ecef_km - user.position_ecef_km()).norm();
}

double elevation_angle_deg(const SatelliteState& sat, const GroundUser& user) {
  const Vec3 p = user.position_ecef_km();
  const Vec3 d = sat.position_ecef_km - p;
  const double range = d.norm();
  if (range == 0.0) return 90.0;
  const double s = std::clamp(d.dot(p) / (range * p.norm()), -1.0, 1.0);
  return rad2deg(std::asin(s));
}

std::vector<VisibilityRecord> visible_satellites(const GroundUser& user,
                                                 std::span<const SatelliteState> sats,
                                                 double min_elevation_deg) {
  std::vector<VisibilityRecord> out;
  for (const auto& s : sats) {
    const double el = elevation_angle_deg(s, user);
    if (el >= min_elevation_deg) out.push_back({s.sat_id, el, slant_range_km(s, user), 1});
  }
  std::sort(out.begin(), out.end(),
            [](const VisibilityRecord& a, const VisibilityRecord& b) { return a.sat_id < b.sat_id; });
  return out;
}

Constellation::Constellation(ConstellationSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  orbits_.reserve(spec_.satellite_count());
  for (const auto& shell : spec_.shells) {
    const double r = shell.radius_km();
    const double n = std::sqrt(kEarthMuKm3PerS2 / (r * r * r));
    for (int p = 0; p < shell.plane_count; ++p) {
      const double raan = deg2rad(shell.raan_spread_deg * p / shell.plane_count);
      for (int k = 0; k < shell.sats_per_plane; ++k) {
        const double phase =
            2.0 * kPi * k / shell.sats_per_plane + deg2rad(shell.phasing_offset_deg * p);
        orbits_.push_back({r, deg2rad(shell.inclination_deg), raan, phase, n});
      }
    }
  }
}

void Constellation::check_id(int sat_id) const {
  if (sat_id < 0 || sat_id >= size())
    throw InputError("satellite id " + std::to_string(sat_id) + " out of range");
}

Vec3 Constellation::inertial_position_km(int sat_id, double t_seconds) const {
  check_id(sat_id);
  const Orbit& o = orbits_[sat_id];
  const double u = o.phase0_rad + o.mean_motion_rad_s * t_seconds;
  const double cu = std::cos(u), su = std::sin(u);
  const double cO = std::cos(o.raan_rad), sO = std::sin(o.raan_rad);
  const double ci = std::cos(o.inclination_rad), si = std::sin(o.inclination_rad);
  return {o.radius_km * (cu * cO - su * ci * sO), o.radius_km * (cu * sO + su * ci * cO),
          o.radius_km * (su * si)};
}

Vec3 Constellation::ecef_position_km(int sat_id, double t_seconds) const {
  const Vec3 r = inertial_position_km(sat_id, t_seconds);
  const double th = kEarthRotationRadPerS * t_seconds;
  const double c = std::cos(th), s = std::sin(th);
  return {c * r.x + s * r.y, -s * r.x + c * r.y, r.z};
}

SatelliteState Constellation::state(int sat_id, int slot) const {
  if (slot < 0) throw InputError("slot must be >= 0");
  return {sat_id, ecef_position_km(sat_id, slot * spec_.slot_seconds), slot};
}

std::vector<SatelliteState> Constellation::propagate(int slot) const {
  if (slot < 0) throw InputError("slot must be >= 0");
  std::vector<SatelliteState> out;
  out.reserve(orbits_.size());
  for (int i = 0; i < size(); ++i) out.push_back(state(i, slot));
  return out;
}

double Constellation::orbital_period_s(int sat_id) const {
  check_id(sat_id);
  return 2.0 * kPi / orbits_[sat_id].mean_motion_rad_s;
}

double Constellation::shell_radius_km(int sat_id) const {
  check_id(sat_id);
  return orbits_[sat_id].radius_km;
}

std::vector<VisibilityRecord> Constellation::candidate_set(const GroundUser& user, int slot,
                                                           int horizon_slots) const {
  auto records = visible_satellites(user, propagate(slot), spec_.min_elevation_deg);
  for (auto& r : records) r.remaining_visible_slots = remaining_visibility(user, r.sat_id, slot, horizon_slots);
  return records;
}

int Constellation::remaining_visibility(const GroundUser& user, int sat_id, int slot,
                                        int horizon_slots) const {
  if (horizon_slots < 1) throw InputError("horizon_slots must be >= 1");
  int n = 0;
  while (n < horizon_slots &&
         elevation_angle_deg(state(sat_id, slot + n), user) >= spec_.min_elevation_deg)
    ++n;
  return n;
}

std::vector<SatelliteState> propagate(const ConstellationSpec& spec, int slot, double slot_seconds) {
  ConstellationSpec s = spec;
  s.slot_seconds = slot_seconds;
  return Constellation(std::move(s)).propagate(slot);
}

}  // namespace leoho
