#pragma once

// Dueling double-DQN agent: epsilon-greedy with exponential decay, uniform
// replay, online-argmax / target-evaluation bootstrap targets and periodic
// target synchronisation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "leoho/environment.hpp"
#include "leoho/neuralnet.hpp"
#include "leoho/policy.hpp"
#include "leoho/reward.hpp"
#include "leoho/rng.hpp"

namespace leoho {

struct EpsilonSchedule {
  double epsilon0 = 0.2;
  double epsilon_min = 0.01;
  double k_decay = 1.0;
};

// max(epsilon_min, epsilon0 * exp(-t / k_decay))
double epsilon_at(const EpsilonSchedule& schedule, std::int64_t t);

struct Transition {
  std::vector<double> observation;
  std::vector<std::uint8_t> mask;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_observation;
  std::vector<std::uint8_t> next_mask;
  bool terminal = false;
};

// Fixed-capacity ring; the oldest transition is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  // Throws InputError if the action is not valid under the stored mask.
  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t total_pushed() const { return pushed_; }
  // i = 0 is the oldest live transition.
  const Transition& at(std::size_t i) const;
  // Uniform with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  const Transition& raw(std::size_t slot) const { return data_.at(slot); }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::size_t pushed_ = 0;
  std::vector<Transition> data_;
};

enum class WarmStartPolicy { none, mshbo };

struct AgentConfig {
  double discount = 0.99;
  int batch_size = 256;
  int target_sync_every = 1000;
  double learning_rate = 1e-3;
  std::size_t replay_capacity = 200000;
  EpsilonSchedule epsilon;
  // When true, k_decay is set to (episodes * slots) / 3 at the start of train().
  bool auto_k_decay = true;
  WarmStartPolicy warm_start = WarmStartPolicy::mshbo;
  int warm_start_transitions = 5000;
  std::vector<int> trunk_hidden{128, 128};
  std::vector<int> stream_hidden{64};

  void validate() const;
};

class DuelingDdqnAgent {
 public:
  DuelingDdqnAgent(AgentConfig config, int input_dim, int actions, std::uint64_t seed);

  const AgentConfig& config() const { return config_; }
  AgentConfig& mutable_config() { return config_; }
  DuelingQNet& online() { return online_; }
  const DuelingQNet& online() const { return online_; }
  const DuelingQNet& target() const { return target_; }
  DuelingQNet& target() { return target_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  Rng& rng() { return rng_; }

  std::int64_t env_steps() const { return env_steps_; }
  void advance_env_step() { ++env_steps_; }
  std::int64_t learn_steps() const { return learn_steps_; }
  double epsilon() const { return epsilon_at(config_.epsilon, env_steps_); }

  // Epsilon-greedy at the current schedule value. Throws NoCandidateError on an all-masked slot.
  int select_action(std::span<const double> observation, std::span<const std::uint8_t> mask);
  int select_action(std::span<const double> observation, std::span<const std::uint8_t> mask, double epsilon);
  // Same rule, with Q values already computed.
  int select_from_q(std::span<const double> q, std::span<const std::uint8_t> mask, double epsilon);

  // r for terminal transitions (or no valid next action), otherwise
  // r + discount * Q_target(s', argmax_a' Q_online(s', a')) over valid a'.
  double ddqn_target(const Transition& t) const;

  // One optimiser step on a uniform mini-batch; nullopt while the buffer holds
  // fewer than batch_size transitions.
  std::optional<double> learn_step();
  void sync_target();

 private:
  AgentConfig config_;
  DuelingQNet online_;
  DuelingQNet target_;
  AdamOptimizer optimizer_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::int64_t env_steps_ = 0;
  std::int64_t learn_steps_ = 0;
};

struct RewardSettings {
  AdaptiveWeights initial;
  AdaptationTargets targets;
};

struct TrainingLogRow {
  int episode = 0;
  double mean_reward = 0.0;  // episode reward per user
  double loss = 0.0;         // mean over the episode's learn steps (NaN if none)
  double epsilon = 0.0;      // at the end of the episode
  double alpha = 0.0;        // weights used during the episode
  double beta = 0.0;
  double gamma = 0.0;
  double blocking_rate = 0.0;
  double handover_rate = 0.0;  // handovers per user-slot
};

struct TrainingOptions {
  int episodes = 300;
  std::uint64_t seed = 1;
  RewardSettings reward;
  BaselineParams expert;  // warm-start expert parameters
  // Written when training aborts on a non-finite loss; empty disables the dump.
  std::filesystem::path failure_checkpoint;
};

struct TrainingResult {
  std::vector<TrainingLogRow> log;
  AdaptiveWeights final_weights;
};

// Runs `expert` for as many episodes as needed and stores exactly
// n_transitions of its transitions. No learning happens here.
std::size_t warm_start(DuelingDdqnAgent& agent, Environment& env, Policy& expert, std::size_t n_transitions,
                       const AdaptiveWeights& weights, std::uint64_t seed);

// Full training loop. Throws TrainingError on a non-finite loss after dumping
// options.failure_checkpoint.
TrainingResult train(DuelingDdqnAgent& agent, Environment& env, const TrainingOptions& options);

}  // namespace leoho
