#include "leoho/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

#include "leoho/error.hpp"

namespace leoho {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!keys.contains(item.key())) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

// A scalar is accepted where a sweep list is expected.
void read_int_list(const json& j, const char* key, std::vector<int>& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    if (it->is_array()) {
      out = it->get<std::vector<int>>();
    } else {
      out = {it->get<int>()};
    }
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

OrbitalShell shell_from_json(const json& j, const std::string& where) {
  require_object(j, where);
  reject_unknown(j, where,
                 {"altitude_km", "inclination_deg", "plane_count", "sats_per_plane", "phasing_offset_deg",
                  "raan_spread_deg"});
  OrbitalShell s;
  read(j, "altitude_km", s.altitude_km, where);
  read(j, "inclination_deg", s.inclination_deg, where);
  read(j, "plane_count", s.plane_count, where);
  read(j, "sats_per_plane", s.sats_per_plane, where);
  read(j, "phasing_offset_deg", s.phasing_offset_deg, where);
  read(j, "raan_spread_deg", s.raan_spread_deg, where);
  return s;
}

ConstellationSpec constellation_from_json_into(const json& j, ConstellationSpec spec) {
  const std::string where = "constellation";
  require_object(j, where);
  reject_unknown(j, where, {"min_elevation_deg", "slot_seconds", "shells", "file"});
  if (auto it = j.find("file"); it != j.end()) {
    spec = load_constellation_spec(it->get<std::string>());
  }
  read(j, "min_elevation_deg", spec.min_elevation_deg, where);
  read(j, "slot_seconds", spec.slot_seconds, where);
  if (auto it = j.find("shells"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("constellation.shells: expected an array");
    spec.shells.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      spec.shells.push_back(shell_from_json((*it)[i], "constellation.shells[" + std::to_string(i) + "]"));
    }
  }
  return spec;
}

void link_from_json(const json& j, LinkBudgetParams& link) {
  const std::string where = "link_budget";
  require_object(j, where);
  reject_unknown(j, where,
                 {"bandwidth_hz", "carrier_ghz", "eirp_dbw", "rx_gain_over_temp_db", "noise_bandwidth_factor",
                  "interference_mode", "interference_margin_db"});
  read(j, "bandwidth_hz", link.bandwidth_hz, where);
  read(j, "carrier_ghz", link.carrier_ghz, where);
  read(j, "eirp_dbw", link.eirp_dbw, where);
  read(j, "rx_gain_over_temp_db", link.rx_gain_over_temp_db, where);
  read(j, "noise_bandwidth_factor", link.noise_bandwidth_factor, where);
  read(j, "interference_margin_db", link.interference_margin_db, where);
  if (auto it = j.find("interference_mode"); it != j.end()) {
    const auto mode = it->get<std::string>();
    if (mode == "none") {
      link.interference_mode = InterferenceMode::none;
    } else if (mode == "fixed_margin_db") {
      link.interference_mode = InterferenceMode::fixed_margin_db;
    } else {
      throw ConfigError("link_budget.interference_mode: expected 'none' or 'fixed_margin_db'");
    }
  }
}

void region_from_json(const json& j, UserRegion& r) {
  const std::string where = "environment.user_region";
  require_object(j, where);
  reject_unknown(j, where, {"lat_min_deg", "lat_max_deg", "lon_min_deg", "lon_max_deg"});
  read(j, "lat_min_deg", r.lat_min_deg, where);
  read(j, "lat_max_deg", r.lat_max_deg, where);
  read(j, "lon_min_deg", r.lon_min_deg, where);
  read(j, "lon_max_deg", r.lon_max_deg, where);
}

void environment_from_json(const json& j, EnvironmentConfig& env) {
  const std::string where = "environment";
  require_object(j, where);
  reject_unknown(j, where,
                 {"k_max", "rate_norm_bps", "visibility_norm_slots", "blocking_window_slots", "horizon_slots",
                  "max_epoch_offset_slots", "user_region"});
  read(j, "k_max", env.k_max, where);
  read(j, "rate_norm_bps", env.rate_norm_bps, where);
  read(j, "visibility_norm_slots", env.visibility_norm_slots, where);
  read(j, "blocking_window_slots", env.blocking_window_slots, where);
  read(j, "horizon_slots", env.horizon_slots, where);
  read(j, "max_epoch_offset_slots", env.max_epoch_offset_slots, where);
  if (auto it = j.find("user_region"); it != j.end()) region_from_json(*it, env.region);
}

void training_from_json(const json& j, AgentConfig& a) {
  const std::string where = "training";
  require_object(j, where);
  reject_unknown(j, where,
                 {"replay_buffer_size", "batch_size", "learning_rate", "discount_factor", "target_update_frequency",
                  "exploration_epsilon_start", "exploration_epsilon_end", "epsilon_decay_steps",
                  "warm_start_policy", "warm_start_transitions", "trunk_hidden", "stream_hidden"});
  read(j, "replay_buffer_size", a.replay_capacity, where);
  read(j, "batch_size", a.batch_size, where);
  read(j, "learning_rate", a.learning_rate, where);
  read(j, "discount_factor", a.discount, where);
  read(j, "target_update_frequency", a.target_sync_every, where);
  read(j, "exploration_epsilon_start", a.epsilon.epsilon0, where);
  read(j, "exploration_epsilon_end", a.epsilon.epsilon_min, where);
  if (auto it = j.find("epsilon_decay_steps"); it != j.end()) {
    if (it->is_null() || (it->is_string() && it->get<std::string>() == "auto")) {
      a.auto_k_decay = true;
    } else {
      read(j, "epsilon_decay_steps", a.epsilon.k_decay, where);
      a.auto_k_decay = false;
    }
  }
  if (auto it = j.find("warm_start_policy"); it != j.end()) {
    const auto p = it->get<std::string>();
    if (p == "none") {
      a.warm_start = WarmStartPolicy::none;
    } else if (p == "mshbo") {
      a.warm_start = WarmStartPolicy::mshbo;
    } else {
      throw ConfigError("training.warm_start_policy: expected 'none' or 'mshbo'");
    }
  }
  read(j, "warm_start_transitions", a.warm_start_transitions, where);
  read(j, "trunk_hidden", a.trunk_hidden, where);
  read(j, "stream_hidden", a.stream_hidden, where);
}

void reward_from_json(const json& j, RewardSettings& r) {
  const std::string where = "reward";
  require_object(j, where);
  reject_unknown(j, where,
                 {"mode", "alpha", "beta", "gamma", "target_blocking", "target_handover", "eta", "alpha_min",
                  "weight_budget"});
  if (auto it = j.find("mode"); it != j.end()) {
    const auto m = it->get<std::string>();
    if (m == "adaptive") {
      r.initial.mode = WeightMode::adaptive;
    } else if (m == "static") {
      r.initial.mode = WeightMode::static_weights;
    } else {
      throw ConfigError("reward.mode: expected 'adaptive' or 'static'");
    }
  }
  read(j, "alpha", r.initial.alpha, where);
  read(j, "beta", r.initial.beta, where);
  read(j, "gamma", r.initial.gamma, where);
  read(j, "target_blocking", r.targets.target_blocking, where);
  read(j, "target_handover", r.targets.target_handover, where);
  read(j, "eta", r.targets.eta, where);
  read(j, "alpha_min", r.targets.alpha_min, where);
  read(j, "weight_budget", r.targets.weight_budget, where);
}

void baselines_from_json(const json& j, BaselineParams& b) {
  const std::string where = "baselines";
  require_object(j, where);
  reject_unknown(j, where, {"window_slots", "gbw_rate_weight", "gbw_handover_weight", "gbw_load_weight"});
  read(j, "window_slots", b.window_slots, where);
  read(j, "gbw_rate_weight", b.gbw.rate, where);
  read(j, "gbw_handover_weight", b.gbw.handover, where);
  read(j, "gbw_load_weight", b.gbw.load, where);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  const std::string where = "config";
  require_object(j, where);
  reject_unknown(j, where,
                 {"preset", "number_of_ues", "satellite_capacity", "number_of_episodes", "repetitions",
                  "episode_seconds", "policies", "master_seed", "threads", "train_missing_checkpoints",
                  "checkpoint_dir", "agent_sharing", "training", "reward", "environment", "link_budget", "constellation",
                  "baselines"});
  std::string preset = "paper";
  read(j, "preset", preset, where);
  ExperimentConfig c;
  if (preset == "paper") {
    c = paper_preset();
  } else if (preset == "desk") {
    c = desk_preset();
  } else {
    throw ConfigError("config.preset: expected 'paper' or 'desk'");
  }
  read_int_list(j, "number_of_ues", c.users_sweep, where);
  read_int_list(j, "satellite_capacity", c.capacity_sweep, where);
  read(j, "number_of_episodes", c.episodes, where);
  read(j, "repetitions", c.repetitions, where);
  read(j, "episode_seconds", c.episode_seconds, where);
  read(j, "master_seed", c.master_seed, where);
  read(j, "threads", c.threads, where);
  read(j, "train_missing_checkpoints", c.train_missing, where);
  if (auto it = j.find("checkpoint_dir"); it != j.end()) c.checkpoint_dir = it->get<std::string>();
  if (auto it = j.find("agent_sharing"); it != j.end()) {
    const std::string mode = it->is_string() ? it->get<std::string>() : "";
    if (mode == "per_cell") {
      c.shared_agent = false;
    } else if (mode == "shared") {
      c.shared_agent = true;
    } else {
      throw ConfigError("config.agent_sharing: expected 'per_cell' or 'shared'");
    }
  }
  if (auto it = j.find("policies"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("config.policies: expected an array of names");
    c.policies.clear();
    for (const auto& p : *it) c.policies.push_back(parse_policy_kind(p.get<std::string>()));
  }
  if (auto it = j.find("training"); it != j.end()) training_from_json(*it, c.agent);
  if (auto it = j.find("reward"); it != j.end()) reward_from_json(*it, c.reward);
  if (auto it = j.find("environment"); it != j.end()) environment_from_json(*it, c.env);
  if (auto it = j.find("link_budget"); it != j.end()) link_from_json(*it, c.env.link);
  if (auto it = j.find("constellation"); it != j.end()) {
    c.env.constellation = constellation_from_json_into(*it, c.env.constellation);
  }
  if (auto it = j.find("baselines"); it != j.end()) baselines_from_json(*it, c.baselines);
  c.env.episode_slots = c.episode_slots();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json_file(path));
}

ConstellationSpec constellation_from_json(const json& j) {
  ConstellationSpec spec = constellation_from_json_into(j, ConstellationSpec{});
  spec.validate();
  return spec;
}

ConstellationSpec load_constellation_spec(const std::filesystem::path& path) {
  return constellation_from_json(read_json_file(path));
}

json to_json(const ConstellationSpec& spec) {
  json shells = json::array();
  for (const auto& s : spec.shells) {
    shells.push_back({{"altitude_km", s.altitude_km},
                      {"inclination_deg", s.inclination_deg},
                      {"plane_count", s.plane_count},
                      {"sats_per_plane", s.sats_per_plane},
                      {"phasing_offset_deg", s.phasing_offset_deg},
                      {"raan_spread_deg", s.raan_spread_deg}});
  }
  return {{"min_elevation_deg", spec.min_elevation_deg}, {"slot_seconds", spec.slot_seconds}, {"shells", shells}};
}

json to_json(const ExperimentConfig& c) {
  json policies = json::array();
  for (auto p : c.policies) policies.push_back(policy_name(p));
  json training = {{"replay_buffer_size", c.agent.replay_capacity},
                   {"batch_size", c.agent.batch_size},
                   {"learning_rate", c.agent.learning_rate},
                   {"discount_factor", c.agent.discount},
                   {"target_update_frequency", c.agent.target_sync_every},
                   {"exploration_epsilon_start", c.agent.epsilon.epsilon0},
                   {"exploration_epsilon_end", c.agent.epsilon.epsilon_min},
                   {"warm_start_policy", c.agent.warm_start == WarmStartPolicy::mshbo ? "mshbo" : "none"},
                   {"warm_start_transitions", c.agent.warm_start_transitions},
                   {"trunk_hidden", c.agent.trunk_hidden},
                   {"stream_hidden", c.agent.stream_hidden}};
  if (c.agent.auto_k_decay) {
    training["epsilon_decay_steps"] = "auto";
  } else {
    training["epsilon_decay_steps"] = c.agent.epsilon.k_decay;
  }
  const auto& r = c.reward;
  const auto& e = c.env;
  return {
      {"number_of_ues", c.users_sweep},
      {"satellite_capacity", c.capacity_sweep},
      {"number_of_episodes", c.episodes},
      {"repetitions", c.repetitions},
      {"episode_seconds", c.episode_seconds},
      {"policies", policies},
      {"master_seed", c.master_seed},
      {"threads", c.threads},
      {"train_missing_checkpoints", c.train_missing},
      {"checkpoint_dir", c.checkpoint_dir.string()},
      {"agent_sharing", c.shared_agent ? "shared" : "per_cell"},
      {"training", training},
      {"reward",
       {{"mode", r.initial.mode == WeightMode::adaptive ? "adaptive" : "static"},
        {"alpha", r.initial.alpha},
        {"beta", r.initial.beta},
        {"gamma", r.initial.gamma},
        {"target_blocking", r.targets.target_blocking},
        {"target_handover", r.targets.target_handover},
        {"eta", r.targets.eta},
        {"alpha_min", r.targets.alpha_min},
        {"weight_budget", r.targets.weight_budget}}},
      {"environment",
       {{"k_max", e.k_max},
        {"rate_norm_bps", e.rate_norm_bps},
        {"visibility_norm_slots", e.visibility_norm_slots},
        {"blocking_window_slots", e.blocking_window_slots},
        {"horizon_slots", e.horizon_slots},
        {"max_epoch_offset_slots", e.max_epoch_offset_slots},
        {"user_region",
         {{"lat_min_deg", e.region.lat_min_deg},
          {"lat_max_deg", e.region.lat_max_deg},
          {"lon_min_deg", e.region.lon_min_deg},
          {"lon_max_deg", e.region.lon_max_deg}}}}},
      {"link_budget",
       {{"bandwidth_hz", e.link.bandwidth_hz},
        {"carrier_ghz", e.link.carrier_ghz},
        {"eirp_dbw", e.link.eirp_dbw},
        {"rx_gain_over_temp_db", e.link.rx_gain_over_temp_db},
        {"noise_bandwidth_factor", e.link.noise_bandwidth_factor},
        {"interference_mode",
         e.link.interference_mode == InterferenceMode::none ? "none" : "fixed_margin_db"},
        {"interference_margin_db", e.link.interference_margin_db}}},
      {"constellation", to_json(e.constellation)},
      {"baselines",
       {{"window_slots", c.baselines.window_slots},
        {"gbw_rate_weight", c.baselines.gbw.rate},
        {"gbw_handover_weight", c.baselines.gbw.handover},
        {"gbw_load_weight", c.baselines.gbw.load}}},
  };
}

}  // namespace leoho
