#include "leoho/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "leoho/error.hpp"

namespace leoho {

void UserRegion::validate() const {
  if (lat_min_deg < -90.0 || lat_max_deg > 90.0 || lat_min_deg > lat_max_deg)
    throw ConfigError("user region latitude bounds must satisfy -90 <= min <= max <= 90");
  if (lon_min_deg < -180.0 || lon_max_deg > 180.0 || lon_min_deg > lon_max_deg)
    throw ConfigError("user region longitude bounds must satisfy -180 <= min <= max <= 180");
}

Scenario::Scenario(int users, int satellites, int slots)
    : users_(users), satellites_(satellites), slots_(slots) {
  if (users <= 0) throw ConfigError("scenario needs at least one user");
  if (satellites <= 0) throw ConfigError("scenario needs at least one satellite");
  if (slots <= 0) throw ConfigError("scenario needs at least one slot");
  links_.resize(static_cast<std::size_t>(users) * slots);
}

std::size_t Scenario::index(int slot, int user) const {
  if (slot < 0 || slot >= slots_ || user < 0 || user >= users_)
    throw InputError("scenario index out of range (slot " + std::to_string(slot) + ", user " +
                     std::to_string(user) + ")");
  return static_cast<std::size_t>(slot) * users_ + user;
}

void Scenario::add_link(int slot, int user, const LinkSample& link) {
  if (link.sat_id < 0 || link.sat_id >= satellites_) throw InputError("link sat_id out of range");
  links_[index(slot, user)].push_back(link);
}

void Scenario::finalize(int horizon_slots) {
  for (auto& list : links_)
    std::sort(list.begin(), list.end(),
              [](const LinkSample& a, const LinkSample& b) { return a.sat_id < b.sat_id; });
  for (int u = 0; u < users_; ++u) {
    for (int t = slots_ - 1; t >= 0; --t) {
      for (auto& l : links_[index(t, u)]) {
        const LinkSample* next = t + 1 < slots_ ? find(t + 1, u, l.sat_id) : nullptr;
        // counts stay uncapped until the pass below
        l.remaining_visible_slots = 1 + (next ? next->remaining_visible_slots : 0);
      }
    }
  }
  if (horizon_slots > 0)
    for (auto& list : links_)
      for (auto& l : list) l.remaining_visible_slots = std::min(l.remaining_visible_slots, horizon_slots);
}

void Scenario::set_capacities(std::vector<int> capacities) {
  if (static_cast<int>(capacities.size()) != satellites_)
    throw ShapeError("capacity vector length must equal the satellite count");
  for (int c : capacities)
    if (c < 0) throw ConfigError("satellite capacity must be non-negative");
  capacities_ = std::move(capacities);
}

std::span<const LinkSample> Scenario::candidates(int slot, int user) const {
  return links_[index(slot, user)];
}

const LinkSample* Scenario::find(int slot, int user, int sat_id) const {
  const auto& list = links_[index(slot, user)];
  auto it = std::lower_bound(list.begin(), list.end(), sat_id,
                             [](const LinkSample& l, int id) { return l.sat_id < id; });
  return it != list.end() && it->sat_id == sat_id ? &*it : nullptr;
}

std::vector<GroundUser> sample_users(int count, const UserRegion& region, Rng& rng) {
  region.validate();
  std::uniform_real_distribution<double> z(std::sin(deg2rad(region.lat_min_deg)),
                                           std::sin(deg2rad(region.lat_max_deg)));
  std::uniform_real_distribution<double> lon(region.lon_min_deg, region.lon_max_deg);
  std::vector<GroundUser> users;
  users.reserve(count);
  for (int u = 0; u < count; ++u) {
    const double lat = rad2deg(std::asin(z(rng)));
    double lo = lon(rng);
    if (lo >= 180.0) lo -= 360.0;
    users.push_back({u, lat, lo});
  }
  return users;
}

Scenario build_constellation_scenario(const Constellation& constellation,
                                      const LinkBudgetParams& link,
                                      std::span<const GroundUser> users, int start_slot,
                                      int slots, int horizon_slots) {
  link.validate();
  Scenario sc(static_cast<int>(users.size()), constellation.size(), slots);
  const double min_el = constellation.spec().min_elevation_deg;
  for (int t = 0; t < slots; ++t) {
    const auto sats = constellation.propagate(start_slot + t);
    for (std::size_t u = 0; u < users.size(); ++u) {
      for (const auto& rec : visible_satellites(users[u], sats, min_el)) {
        const double rate = achievable_rate(link, sinr(link, rec.slant_range_km));
        sc.add_link(t, static_cast<int>(u), {rec.sat_id, rate, rec.elevation_deg, rec.slant_range_km, 0});
      }
    }
  }
  sc.finalize(horizon_slots);
  return sc;
}

}  // namespace leoho
