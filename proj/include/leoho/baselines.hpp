#pragma once

// Rule-based and lookahead handover baselines (MVT, MAC, GBW, MSH, MSHBO) as
// pure decision functions, plus an exhaustive optimum for tiny instances.

#include <span>
#include <vector>

#include "leoho/environment.hpp"
#include "leoho/reward.hpp"
#include "leoho/scenario.hpp"

namespace leoho {

struct CandidateView {
  int sat_id = 0;
  double rate_bps = 0.0;
  int residual_capacity = 0;
  int remaining_visible_slots = 0;
};

// Predicted candidates over the next window_slots slots; slots[0] is the
// current decision slot. Residual capacities are the current ones, frozen.
struct LookaheadWindow {
  int capacity = 1;
  double rate_norm_bps = 1.0;
  std::vector<std::vector<CandidateView>> slots;
};

struct GbwWeights {
  double rate = 1.0;
  double handover = 0.5;
  double load = 0.5;
};

// Max remaining visibility; ties to higher rate, then lower sat_id.
int mvt_select(std::span<const CandidateView> candidates);
// Max residual capacity; ties to higher rate, then lower sat_id.
int mac_select(std::span<const CandidateView> candidates);

// Maximum-weight path through the time-expanded (slot, satellite) graph of the
// window. Node weight: rate*rate_n - load*(1 - residual/capacity); edge weight:
// -handover when consecutive satellites differ (the first edge is measured
// against prev_serving). Returns the first hop. The path stops at the first
// window slot without candidates.
int gbw_select(const LookaheadWindow& window, int prev_serving, const GbwWeights& weights);

// Keeps prev_serving while visible, otherwise the candidate visible longest
// within the window (ties: higher rate, lower sat_id).
int msh_select(const LookaheadWindow& window, int prev_serving);
// MSH restricted to candidates with residual capacity; plain MSH if none has any.
int mshbo_select(const LookaheadWindow& window, int prev_serving);

// Candidate views of the user's current observation (valid slots only).
std::vector<CandidateView> current_candidates(const Environment& env, int user);
// Window built from the current observation plus the scenario's future slots.
LookaheadWindow make_lookahead(const Environment& env, int user, int window_slots);

// ---- exhaustive optimum -----------------------------------------------------

inline constexpr int kOracleMaxUsers = 3;
inline constexpr int kOracleMaxSatellites = 4;
inline constexpr int kOracleMaxSlots = 4;

struct TinyInstance {
  int users = 1;
  int satellites = 1;
  int slots = 1;
  std::vector<int> capacity;  // per satellite
  std::vector<double> rates;  // [slot][user][sat] flattened; 0 = not visible

  double rate(int t, int u, int s) const { return rates[(static_cast<std::size_t>(t) * users + u) * satellites + s]; }
  bool visible(int t, int u, int s) const { return rate(t, u, s) > 0.0; }
  void validate() const;
};

struct OracleResult {
  double objective = 0.0;
  std::vector<std::vector<int>> associations;  // [slot][user]: sat, or kNoSatellite
  std::vector<std::vector<bool>> blocked;      // [slot][user]
};

// Exact maximum of T/unit - lambda1*B - lambda2*C over every outcome sequence
// in which each covered user is either served by a visible satellite within
// capacity or blocked (keeping its previous serving satellite). Throws
// SizeError beyond 3 users, 4 satellites or 4 slots.
OracleResult oracle_enumerate(const TinyInstance& instance, const StaticObjectiveParams& params,
                              double throughput_unit_bps = 1.0);

Scenario to_scenario(const TinyInstance& instance);

}  // namespace leoho
