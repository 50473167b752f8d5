#pragma once

// Sweeps over (policy, users, capacity, repetition seed), training one agent
// per (users, capacity) cell, and CSV emission.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "leoho/agent.hpp"
#include "leoho/environment.hpp"
#include "leoho/policy.hpp"

namespace leoho {

struct ExperimentConfig {
  EnvironmentConfig env;  // users and capacity are overridden per cell
  std::vector<int> users_sweep{10, 15, 20, 25, 30};
  std::vector<int> capacity_sweep{1, 3, 5, 7, 9};
  int episodes = 300;
  int repetitions = 10;
  double episode_seconds = 3600.0;
  std::vector<PolicyKind> policies{PolicyKind::random, PolicyKind::mvt,   PolicyKind::mac,    PolicyKind::gbw,
                                   PolicyKind::msh,    PolicyKind::mshbo, PolicyKind::trained};
  std::uint64_t master_seed = 2026;
  AgentConfig agent;
  RewardSettings reward;
  BaselineParams baselines;
  int threads = 0;  // 0 = hardware concurrency
  bool train_missing = true;
  std::filesystem::path checkpoint_dir = "checkpoints";
  // One agent trained across every cell in sweep order instead of one per cell.
  bool shared_agent = false;

  int episode_slots() const;
  void validate() const;
};

// Table I scale: U in {10..30}, C in {1..9}, 300 episodes, 10 repetitions, 3600 s.
ExperimentConfig paper_preset();
// CI scale: U in {4, 8}, C in {1, 2}, 50 episodes, 120 slots, 3 repetitions.
ExperimentConfig desk_preset();

struct ResultRow {
  std::string policy;
  int users = 0;
  int capacity = 0;
  std::uint64_t seed = 0;
  double throughput_bps = 0.0;
  double blocking_prob = 0.0;
  double handovers_per_user = 0.0;
  double episode_reward = 0.0;
  double wall_time_s = 0.0;
  std::string status = "ok";
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

struct AggregateRow {
  std::string policy;
  int users = 0;
  int capacity = 0;
  int n = 0;
  MeanStd throughput_bps;
  MeanStd blocking_prob;
  MeanStd handovers_per_user;
  MeanStd episode_reward;
};

std::vector<std::uint64_t> repetition_seeds(const ExperimentConfig& config);
EnvironmentConfig cell_environment(const ExperimentConfig& config, int users, int capacity);
std::uint64_t training_seed(const ExperimentConfig& config, int users, int capacity);
// <checkpoint_dir>/<policy>_<users>_<capacity>.ckpt
std::filesystem::path checkpoint_path(const ExperimentConfig& config, PolicyKind policy, int users, int capacity);

struct CellTraining {
  TrainingResult result;
  DuelingQNet network;
};

CellTraining train_cell(const ExperimentConfig& config, int users, int capacity);
// One agent trained for `episodes` on each cell in turn. Exploration, replay
// and reward weights carry over between cells; the expert warm start runs once.
CellTraining train_shared(const ExperimentConfig& config);

// One evaluation episode of `policy` on the (users, capacity) cell under `seed`.
// Trained policies load their checkpoint; a missing one is a ConfigError.
ResultRow run_cell(const ExperimentConfig& config, PolicyKind policy, int users, int capacity, std::uint64_t seed);
ResultRow evaluate_policy(const ExperimentConfig& config, Policy& policy, int users, int capacity,
                          std::uint64_t seed);

std::vector<AggregateRow> aggregate(std::span<const ResultRow> rows);

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;
};

// Trains missing checkpoints, evaluates every cell, and writes
// raw_results.csv, aggregate_results.csv and timing.csv into out_dir.
// A relative checkpoint_dir is resolved against out_dir.
SweepResult run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// CSV schemas (header line first):
//   raw_results.csv       policy,users,capacity,seed,throughput_bps,blocking_prob,handovers_per_user,episode_reward,status
//   aggregate_results.csv policy,users,capacity,n,<metric>_mean,<metric>_std for the four metrics
//   timing.csv            policy,users,capacity,seed,wall_time_s
//   training_log.csv      episode,mean_reward,loss,epsilon,alpha,beta,gamma,blocking_rate,handover_rate
//   weights_log.csv       episode,alpha,beta,gamma
void write_raw_csv(std::ostream& os, std::span<const ResultRow> rows);
std::vector<ResultRow> read_raw_csv(std::istream& is);
void write_aggregate_csv(std::ostream& os, std::span<const AggregateRow> rows);
void write_timing_csv(std::ostream& os, std::span<const ResultRow> rows);
void write_training_log_csv(std::ostream& os, std::span<const TrainingLogRow> rows);
void write_weights_log_csv(std::ostream& os, std::span<const TrainingLogRow> rows);

extern const char* const kRawCsvHeader;
extern const char* const kAggregateCsvHeader;
extern const char* const kTrainingLogCsvHeader;
extern const char* const kWeightsLogCsvHeader;

}  // namespace leoho
