#pragma once

// Per-episode link table: for every (slot, user) the visible satellites with
// their rates and remaining visibility. The environment and the lookahead
// baselines read from this table instead of re-propagating orbits.

#include <cstdint>
#include <span>
#include <vector>

#include "leoho/channel.hpp"
#include "leoho/constellation.hpp"
#include "leoho/rng.hpp"

namespace leoho {

struct LinkSample {
  int sat_id = 0;
  double rate_bps = 0.0;
  double elevation_deg = 90.0;
  double slant_range_km = 0.0;
  int remaining_visible_slots = 0;
};

// Users are drawn uniformly by area inside a latitude/longitude box.
struct UserRegion {
  double lat_min_deg = 20.0;
  double lat_max_deg = 30.0;
  double lon_min_deg = 0.0;
  double lon_max_deg = 10.0;

  void validate() const;
};

class Scenario {
 public:
  Scenario() = default;
  Scenario(int users, int satellites, int slots);

  int users() const { return users_; }
  int satellites() const { return satellites_; }
  int slots() const { return slots_; }

  void add_link(int slot, int user, const LinkSample& link);
  // Sorts every candidate list by sat_id and fills remaining_visible_slots:
  // consecutive visible slots from each slot on, capped at horizon_slots
  // (0 = the rest of the episode).
  void finalize(int horizon_slots = 0);

  // Per-satellite capacities; empty means the environment's uniform capacity applies.
  void set_capacities(std::vector<int> capacities);
  const std::vector<int>& capacities() const { return capacities_; }

  std::span<const LinkSample> candidates(int slot, int user) const;
  const LinkSample* find(int slot, int user, int sat_id) const;

 private:
  std::size_t index(int slot, int user) const;

  int users_ = 0;
  int satellites_ = 0;
  int slots_ = 0;
  std::vector<std::vector<LinkSample>> links_;
  std::vector<int> capacities_;
};

std::vector<GroundUser> sample_users(int count, const UserRegion& region, Rng& rng);

Scenario build_constellation_scenario(const Constellation& constellation,
                                      const LinkBudgetParams& link,
                                      std::span<const GroundUser> users, int start_slot,
                                      int slots, int horizon_slots = 0);

}  // namespace leoho
