#pragma once

// JSON configuration files. Keys follow the simulation-parameter names
// (number_of_ues, satellite_capacity, replay_buffer_size, ...); every key is
// optional and falls back to the preset named by "preset" ("paper" or
// "desk", default "paper"). Unknown keys are rejected.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "leoho/constellation.hpp"
#include "leoho/experiments.hpp"

namespace leoho {

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

// {"min_elevation_deg": 20, "slot_seconds": 10, "shells": [{"altitude_km": ..,
//  "inclination_deg": .., "plane_count": .., "sats_per_plane": ..,
//  "phasing_offset_deg": .., "raan_spread_deg": ..}]}
ConstellationSpec load_constellation_spec(const std::filesystem::path& path);
ConstellationSpec constellation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ConstellationSpec& spec);

}  // namespace leoho
