#include "leoho/environment.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>

#include "leoho/error.hpp"

namespace leoho {

void EnvironmentConfig::validate() const {
  constellation.validate();
  link.validate();
  region.validate();
  if (users <= 0) throw ConfigError("users must be positive");
  if (capacity <= 0) throw ConfigError("capacity must be positive");
  if (episode_slots <= 0) throw ConfigError("episode_slots must be positive");
  if (k_max <= 0) throw ConfigError("k_max must be positive");
  if (horizon_slots < 0) throw ConfigError("horizon_slots must be >= 0");
  if (max_epoch_offset_slots < 0) throw ConfigError("max_epoch_offset_slots must be >= 0");
  if (!(rate_norm_bps > 0.0)) throw ConfigError("rate_norm_bps must be > 0");
  if (visibility_norm_slots <= 0) throw ConfigError("visibility_norm_slots must be positive");
  if (blocking_window_slots <= 0) throw ConfigError("blocking_window_slots must be positive");
}

std::vector<std::uint8_t> Observation::mask() const {
  std::vector<std::uint8_t> m(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) m[i] = slots[i].valid ? 1 : 0;
  return m;
}

bool Observation::any_valid() const { return valid_count() > 0; }

int Observation::valid_count() const {
  return static_cast<int>(std::count_if(slots.begin(), slots.end(), [](const CandidateSlot& c) { return c.valid; }));
}

int Observation::slot_of(int sat_id) const {
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i].valid && slots[i].sat_id == sat_id) return static_cast<int>(i);
  return kNoAction;
}

namespace {

double unit_clip(double v) { return std::clamp(v, 0.0, 1.0); }

int capacity_of(const NetworkState& state, int sat) { return state.capacities[sat]; }

}  // namespace

Observation build_observation(const NetworkState& state, const Scenario& scenario,
                              const EnvironmentConfig& config, int user,
                              double recent_blocking_rate) {
  Observation obs;
  obs.user_id = user;
  obs.slot = state.slot;
  obs.slots.assign(config.k_max, CandidateSlot{});
  const int T = scenario.slots();
  obs.slot_fraction = T > 0 ? unit_clip(static_cast<double>(state.slot) / T) : 0.0;
  obs.recent_blocking_rate = unit_clip(recent_blocking_rate);

  if (state.slot < T) {
    std::vector<LinkSample> cands(scenario.candidates(state.slot, user).begin(),
                                  scenario.candidates(state.slot, user).end());
    std::sort(cands.begin(), cands.end(), [](const LinkSample& a, const LinkSample& b) {
      if (a.rate_bps != b.rate_bps) return a.rate_bps > b.rate_bps;
      return a.sat_id < b.sat_id;
    });
    const std::size_t n = std::min<std::size_t>(cands.size(), config.k_max);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& l = cands[i];
      CandidateSlot& c = obs.slots[i];
      c.sat_id = l.sat_id;
      c.rate_bps = l.rate_bps;
      c.residual_capacity = capacity_of(state, l.sat_id) - state.loads[l.sat_id] +
                            (state.associations[user] == l.sat_id ? 1 : 0);
      c.remaining_visible_slots = l.remaining_visible_slots;
      c.is_previous_serving = state.prev_serving[user] == l.sat_id;
      c.valid = true;
    }
  }

  obs.features.assign(observation_size(config.k_max), 0.0);
  for (int i = 0; i < config.k_max; ++i) {
    const CandidateSlot& c = obs.slots[i];
    if (!c.valid) continue;
    const int cap = capacity_of(state, c.sat_id);
    double* f = obs.features.data() + kFeaturesPerSlot * i;
    f[0] = unit_clip(c.rate_bps / config.rate_norm_bps);
    f[1] = cap > 0 ? unit_clip(static_cast<double>(c.residual_capacity) / cap) : 0.0;
    f[2] = unit_clip(static_cast<double>(c.remaining_visible_slots) / config.visibility_norm_slots);
    f[3] = c.is_previous_serving ? 1.0 : 0.0;
    f[4] = 1.0;
  }
  obs.features[kFeaturesPerSlot * config.k_max] = obs.slot_fraction;
  obs.features[kFeaturesPerSlot * config.k_max + 1] = obs.recent_blocking_rate;
  return obs;
}

Environment::Environment(EnvironmentConfig config) : config_(std::move(config)) {
  config_.validate();
  auto constellation = std::make_shared<const Constellation>(config_.constellation);
  source_ = [constellation, cfg = config_](std::uint64_t seed) {
    Rng rng(derive_seed(seed, {1}));
    const auto users = sample_users(cfg.users, cfg.region, rng);
    const int offset = std::uniform_int_distribution<int>(0, cfg.max_epoch_offset_slots)(rng);
    return build_constellation_scenario(*constellation, cfg.link, users, offset, cfg.episode_slots,
                                        cfg.horizon_slots);
  };
}

Environment::Environment(EnvironmentConfig config, ScenarioSource source)
    : config_(std::move(config)), source_(std::move(source)) {
  if (config_.users <= 0) throw ConfigError("users must be positive");
  if (config_.capacity <= 0) throw ConfigError("capacity must be positive");
  if (config_.k_max <= 0) throw ConfigError("k_max must be positive");
  if (!(config_.rate_norm_bps > 0.0)) throw ConfigError("rate_norm_bps must be > 0");
  if (config_.visibility_norm_slots <= 0 || config_.blocking_window_slots <= 0)
    throw ConfigError("normalisation windows must be positive");
  if (!source_) throw ConfigError("scenario source is empty");
}

const std::vector<Observation>& Environment::reset(std::uint64_t seed) {
  scenario_ = source_(seed);
  if (scenario_.users() != config_.users)
    throw ConfigError("scenario user count " + std::to_string(scenario_.users()) +
                      " does not match configured users " + std::to_string(config_.users));
  const int U = scenario_.users();
  const int S = scenario_.satellites();
  if (S <= 0) throw ConfigError("scenario has no satellites");
  rng_.seed(derive_seed(seed, {2}));
  state_ = NetworkState{};
  state_.slot = 0;
  state_.associations.assign(U, kNoSatellite);
  state_.prev_serving.assign(U, kNoSatellite);
  state_.loads.assign(S, 0);
  state_.capacities = scenario_.capacities().empty() ? std::vector<int>(S, config_.capacity)
                                                     : scenario_.capacities();
  trace_ = EpisodeTrace{U, {}};
  blocked_history_.clear();
  invalid_actions_ = 0;
  initialized_ = true;
  rebuild_observations();
  return observations_;
}

double Environment::recent_blocking_rate() const {
  if (blocked_history_.empty()) return 0.0;
  const std::size_t w = std::min<std::size_t>(blocked_history_.size(), config_.blocking_window_slots);
  const double sum = std::accumulate(blocked_history_.end() - static_cast<std::ptrdiff_t>(w),
                                     blocked_history_.end(), 0.0);
  return sum / (static_cast<double>(w) * users());
}

int Environment::residual_for(int user, int sat_id) const {
  return state_.capacities[sat_id] - state_.loads[sat_id] +
         (state_.associations[user] == sat_id ? 1 : 0);
}

void Environment::rebuild_observations() {
  observations_.clear();
  const double blk = recent_blocking_rate();
  for (int u = 0; u < users(); ++u)
    observations_.push_back(build_observation(state_, scenario_, config_, u, blk));
}

StepResult Environment::step(std::span<const int> actions) {
  if (!initialized_) throw InputError("step() before reset()");
  if (done()) throw InputError("episode already finished");
  const int U = users();
  if (static_cast<int>(actions.size()) != U)
    throw ShapeError("expected " + std::to_string(U) + " actions, got " + std::to_string(actions.size()));

  std::vector<int> order(U);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);

  std::vector<int> loads(scenario_.satellites(), 0);
  std::vector<int> assoc(U, kNoSatellite);
  std::vector<StepOutcome> out(U);
  int blocked = 0;
  for (int u : order) {
    StepOutcome& o = out[u];
    o.slot = state_.slot;
    o.user_id = u;
    const Observation& obs = observations_[u];
    const int a = actions[u];
    if (!obs.any_valid()) {
      o.out_of_coverage = true;
      continue;
    }
    if (a < 0 || a >= static_cast<int>(obs.slots.size()) || !obs.slots[a].valid) {
      o.invalid_action = true;
      o.blocked = true;
      ++invalid_actions_;
      ++blocked;
      continue;
    }
    const CandidateSlot& c = obs.slots[a];
    o.chosen_sat = c.sat_id;
    if (loads[c.sat_id] >= state_.capacities[c.sat_id]) {
      o.blocked = true;
      ++blocked;
      continue;
    }
    ++loads[c.sat_id];
    assoc[u] = c.sat_id;
    o.admitted = true;
    o.rate_bps = c.rate_bps;
    const int prev = state_.prev_serving[u];
    o.handover = prev != kNoSatellite && prev != c.sat_id;
  }

  for (int u = 0; u < U; ++u)
    if (assoc[u] != kNoSatellite) state_.prev_serving[u] = assoc[u];
  state_.associations = std::move(assoc);
  state_.loads = std::move(loads);
  ++state_.slot;
  blocked_history_.push_back(blocked);
  trace_.slots.push_back(out);
  rebuild_observations();
  return {std::move(out), done()};
}

EpisodeMetrics episode_metrics(const EpisodeTrace& trace) {
  if (trace.slots.empty() || trace.users <= 0) throw DomainError("episode trace is empty");
  const double T = static_cast<double>(trace.slots.size());
  const double U = static_cast<double>(trace.users);
  EpisodeMetrics m;
  double rate_sum = 0.0;
  long blocked = 0, handovers = 0, uncovered = 0;
  for (std::size_t t = 0; t < trace.slots.size(); ++t) {
    double slot_rate = 0.0;
    int slot_blocked = 0, slot_ho = 0;
    for (const auto& o : trace.slots[t]) {
      if (o.admitted) slot_rate += o.rate_bps;
      if (o.blocked) ++slot_blocked;
      // switching cost counts from the second slot on
      if (o.handover && t >= 1) ++slot_ho;
      if (o.out_of_coverage) ++uncovered;
      if (o.invalid_action) ++m.invalid_actions;
    }
    rate_sum += slot_rate;
    blocked += slot_blocked;
    handovers += slot_ho;
    m.throughput_per_slot.push_back(slot_rate);
    m.blocked_per_slot.push_back(slot_blocked);
    m.handovers_per_slot.push_back(slot_ho);
  }
  m.throughput_bps_mean = rate_sum / T;
  m.blocking_prob = static_cast<double>(blocked) / (U * T);
  m.handovers_per_user = static_cast<double>(handovers) / U;
  m.out_of_coverage_rate = static_cast<double>(uncovered) / (U * T);
  return m;
}

void write_trace_csv(std::ostream& os, const EpisodeTrace& trace) {
  os << "slot,user,chosen_sat,admitted,blocked,handover,rate_bps\n";
  const auto old = os.precision(17);
  for (const auto& slot : trace.slots)
    for (const auto& o : slot)
      os << o.slot << ',' << o.user_id << ',' << o.chosen_sat << ',' << int(o.admitted) << ','
         << int(o.blocked) << ',' << int(o.handover) << ',' << o.rate_bps << '\n';
  os.precision(old);
}

}  // namespace leoho
