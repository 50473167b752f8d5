#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "leoho/baselines.hpp"
#include "leoho/environment.hpp"
#include "leoho/neuralnet.hpp"
#include "leoho/reward.hpp"

namespace leoho {

enum class PolicyKind { random, mvt, mac, gbw, msh, mshbo, trained };

std::string policy_name(PolicyKind kind);
// Accepts the names produced by policy_name plus "trained". Throws ConfigError.
PolicyKind parse_policy_kind(std::string_view name);

struct BaselineParams {
  int window_slots = 6;
  GbwWeights gbw;
};

// Joint decision for every user of the current slot: one candidate-slot index
// per user, kNoAction for users without candidates.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyKind kind() const = 0;
  virtual std::vector<int> act(const Environment& env) = 0;
};

// Throws ConfigError for PolicyKind::trained.
std::unique_ptr<Policy> make_baseline_policy(PolicyKind kind, const BaselineParams& params,
                                             std::uint64_t seed = 0);

// argmax of the masked dueling Q per user, ties to the lowest slot.
class GreedyQPolicy : public Policy {
 public:
  explicit GreedyQPolicy(DuelingQNet net) : net_(std::move(net)) {}
  PolicyKind kind() const override { return PolicyKind::trained; }
  std::vector<int> act(const Environment& env) override;
  const DuelingQNet& network() const { return net_; }

 private:
  DuelingQNet net_;
};

// Masked Q values for every user's current observation (actions x users).
Eigen::MatrixXd user_q_values(const DuelingQNet& net, const Environment& env);

struct EpisodeResult {
  EpisodeTrace trace;
  EpisodeMetrics metrics;
  double episode_reward = 0.0;  // summed reward over slots and users, divided by users
};

// Resets env with `seed`, runs the policy to the end, and scores every
// outcome with fixed `weights`.
EpisodeResult run_episode(Environment& env, Policy& policy, std::uint64_t seed,
                          const AdaptiveWeights& weights);

}  // namespace leoho
