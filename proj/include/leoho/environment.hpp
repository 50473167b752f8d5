#pragma once

// Slotted multi-user handover environment. Every slot each user picks one
// candidate slot of its observation; admissions are resolved jointly in a
// seeded random order against per-satellite capacities.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "leoho/channel.hpp"
#include "leoho/constellation.hpp"
#include "leoho/rng.hpp"
#include "leoho/scenario.hpp"

namespace leoho {

inline constexpr int kNoSatellite = -1;
inline constexpr int kNoAction = -1;
inline constexpr int kFeaturesPerSlot = 5;
inline constexpr int kGlobalFeatures = 2;

inline constexpr int observation_size(int k_max) { return kFeaturesPerSlot * k_max + kGlobalFeatures; }

struct EnvironmentConfig {
  ConstellationSpec constellation = telesat_like_spec();
  LinkBudgetParams link;
  UserRegion region;
  int users = 4;
  int capacity = 1;
  int episode_slots = 120;
  int k_max = 8;
  int horizon_slots = 0;            // remaining-visibility cap, 0 = rest of episode
  int max_epoch_offset_slots = 600; // episode start drawn from [0, this]
  double rate_norm_bps = 50e6;
  int visibility_norm_slots = 60;
  int blocking_window_slots = 10;

  void validate() const;
};

// x_{u,s}(t) as a per-user satellite id, plus loads, capacities and s_u(t-1).
struct NetworkState {
  int slot = 0;
  std::vector<int> associations;  // user -> sat or kNoSatellite
  std::vector<int> loads;         // sat -> admitted users
  std::vector<int> capacities;    // sat -> C_s
  std::vector<int> prev_serving;  // user -> last serving sat or kNoSatellite
};

struct CandidateSlot {
  int sat_id = kNoSatellite;
  double rate_bps = 0.0;
  int residual_capacity = 0;  // capacity left for this user if the others stay put
  int remaining_visible_slots = 0;
  bool is_previous_serving = false;
  bool valid = false;
};

struct Observation {
  int user_id = 0;
  int slot = 0;
  std::vector<CandidateSlot> slots;  // exactly k_max, rate-sorted, padded
  double slot_fraction = 0.0;
  double recent_blocking_rate = 0.0;
  // Per slot: rate, residual capacity, remaining visibility, previous-serving
  // flag, validity; then slot fraction and recent blocking rate. All in [0, 1].
  std::vector<double> features;

  std::vector<std::uint8_t> mask() const;
  bool any_valid() const;
  int valid_count() const;
  // Slot index holding sat_id, or kNoAction.
  int slot_of(int sat_id) const;
};

struct StepOutcome {
  int slot = 0;
  int user_id = 0;
  int chosen_sat = kNoSatellite;
  bool admitted = false;
  bool blocked = false;
  bool handover = false;
  bool invalid_action = false;
  bool out_of_coverage = false;
  double rate_bps = 0.0;
};

struct EpisodeTrace {
  int users = 0;
  std::vector<std::vector<StepOutcome>> slots;  // [slot][user]
};

struct EpisodeMetrics {
  double throughput_bps_mean = 0.0;  // time average of summed admitted rates
  double blocking_prob = 0.0;
  double handovers_per_user = 0.0;
  double out_of_coverage_rate = 0.0;
  int invalid_actions = 0;
  std::vector<double> throughput_per_slot;
  std::vector<int> blocked_per_slot;
  std::vector<int> handovers_per_slot;
};

// Throws DomainError on an empty trace.
EpisodeMetrics episode_metrics(const EpisodeTrace& trace);

// Header: slot,user,chosen_sat,admitted,blocked,handover,rate_bps
void write_trace_csv(std::ostream& os, const EpisodeTrace& trace);

// Encodes one user's view of the network. Candidates are sorted by descending
// rate then ascending sat_id and truncated to k_max.
Observation build_observation(const NetworkState& state, const Scenario& scenario,
                              const EnvironmentConfig& config, int user,
                              double recent_blocking_rate);

struct StepResult {
  std::vector<StepOutcome> outcomes;
  bool done = false;
};

class Environment {
 public:
  using ScenarioSource = std::function<Scenario(std::uint64_t seed)>;

  // Scenarios generated from the constellation: users sampled in the region,
  // random epoch offset, both drawn from the reset seed.
  explicit Environment(EnvironmentConfig config);
  // Scenarios supplied by the caller (tiny instances, synthetic tests).
  Environment(EnvironmentConfig config, ScenarioSource source);

  const std::vector<Observation>& reset(std::uint64_t seed);
  // actions[u] is a candidate-slot index of observations()[u], or kNoAction
  // for users without a valid slot.
  StepResult step(std::span<const int> actions);

  const EnvironmentConfig& config() const { return config_; }
  const NetworkState& state() const { return state_; }
  const Scenario& scenario() const { return scenario_; }
  const std::vector<Observation>& observations() const { return observations_; }
  const EpisodeTrace& trace() const { return trace_; }
  bool done() const { return state_.slot >= episode_slots(); }
  int episode_slots() const { return scenario_.slots(); }
  int users() const { return scenario_.users(); }
  int invalid_actions() const { return invalid_actions_; }
  double recent_blocking_rate() const;

  // Residual capacity of sat_id from user's point of view: C - L + [user sits on sat_id].
  int residual_for(int user, int sat_id) const;

 private:
  void rebuild_observations();

  EnvironmentConfig config_;
  ScenarioSource source_;
  Scenario scenario_;
  NetworkState state_;
  std::vector<Observation> observations_;
  EpisodeTrace trace_;
  std::vector<int> blocked_history_;
  Rng rng_;
  int invalid_actions_ = 0;
  bool initialized_ = false;
};

}  // namespace leoho
