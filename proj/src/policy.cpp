#include "leoho/policy.hpp"

#include <array>

#include "leoho/error.hpp"

namespace leoho {

namespace {

constexpr std::array<std::pair<PolicyKind, std::string_view>, 7> kNames{{
    {PolicyKind::random, "random"},
    {PolicyKind::mvt, "mvt"},
    {PolicyKind::mac, "mac"},
    {PolicyKind::gbw, "gbw"},
    {PolicyKind::msh, "msh"},
    {PolicyKind::mshbo, "mshbo"},
    {PolicyKind::trained, "dueling_ddqn"},
}};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  PolicyKind kind() const override { return PolicyKind::random; }
  std::vector<int> act(const Environment& env) override {
    std::vector<int> out;
    for (const auto& obs : env.observations()) {
      std::vector<int> valid;
      for (std::size_t i = 0; i < obs.slots.size(); ++i)
        if (obs.slots[i].valid) valid.push_back(static_cast<int>(i));
      out.push_back(valid.empty() ? kNoAction : valid[uniform_index(rng_, static_cast<int>(valid.size()))]);
    }
    return out;
  }

 private:
  Rng rng_;
};

class RulePolicy : public Policy {
 public:
  RulePolicy(PolicyKind kind, BaselineParams params) : kind_(kind), params_(params) {}
  PolicyKind kind() const override { return kind_; }
  std::vector<int> act(const Environment& env) override {
    std::vector<int> out;
    for (int u = 0; u < env.users(); ++u) {
      const Observation& obs = env.observations()[u];
      if (!obs.any_valid()) {
        out.push_back(kNoAction);
        continue;
      }
      out.push_back(obs.slot_of(decide(env, u)));
    }
    return out;
  }

 private:
  int decide(const Environment& env, int u) const {
    const int prev = env.state().prev_serving[u];
    switch (kind_) {
      case PolicyKind::mvt: return mvt_select(current_candidates(env, u));
      case PolicyKind::mac: return mac_select(current_candidates(env, u));
      case PolicyKind::gbw: return gbw_select(make_lookahead(env, u, params_.window_slots), prev, params_.gbw);
      case PolicyKind::msh: return msh_select(make_lookahead(env, u, params_.window_slots), prev);
      case PolicyKind::mshbo: return mshbo_select(make_lookahead(env, u, params_.window_slots), prev);
      default: throw ConfigError("not a rule-based policy");
    }
  }

  PolicyKind kind_;
  BaselineParams params_;
};

}  // namespace

std::string policy_name(PolicyKind kind) {
  for (const auto& [k, n] : kNames)
    if (k == kind) return std::string(n);
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "trained") return PolicyKind::trained;
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  throw ConfigError("unknown policy '" + std::string(name) +
                    "' (expected random, mvt, mac, gbw, msh, mshbo or dueling_ddqn)");
}

std::unique_ptr<Policy> make_baseline_policy(PolicyKind kind, const BaselineParams& params,
                                             std::uint64_t seed) {
  if (params.window_slots < 1) throw ConfigError("baseline window must be at least one slot");
  switch (kind) {
    case PolicyKind::random: return std::make_unique<RandomPolicy>(seed);
    case PolicyKind::trained: throw ConfigError("trained policies need a network");
    default: return std::make_unique<RulePolicy>(kind, params);
  }
}

Eigen::MatrixXd user_q_values(const DuelingQNet& net, const Environment& env) {
  const auto& obs = env.observations();
  const int n = static_cast<int>(obs.size());
  Eigen::MatrixXd x(net.input_dim(), n);
  Eigen::MatrixXd m(net.actions(), n);
  for (int u = 0; u < n; ++u) {
    if (static_cast<int>(obs[u].features.size()) != net.input_dim())
      throw ShapeError("observation size does not match the network input");
    x.col(u) = ConstVectorMap(obs[u].features.data(), net.input_dim());
    for (int j = 0; j < net.actions(); ++j) m(j, u) = obs[u].slots[j].valid ? 1.0 : 0.0;
  }
  return net.q_values(x, &m);
}

std::vector<int> GreedyQPolicy::act(const Environment& env) {
  const Eigen::MatrixXd q = user_q_values(net_, env);
  std::vector<int> out;
  for (int u = 0; u < env.users(); ++u) {
    const auto mask = env.observations()[u].mask();
    out.push_back(masked_argmax(std::span<const double>(q.col(u).data(), q.rows()), mask));
  }
  return out;
}

EpisodeResult run_episode(Environment& env, Policy& policy, std::uint64_t seed, const AdaptiveWeights& weights) {
  env.reset(seed);
  double reward = 0.0;
  while (!env.done()) {
    const auto actions = policy.act(env);
    for (const auto& o : env.step(actions).outcomes)
      reward += compute_reward(o, weights, env.config().rate_norm_bps).scalar;
  }
  EpisodeResult r;
  r.trace = env.trace();
  r.metrics = episode_metrics(r.trace);
  r.episode_reward = reward / env.users();
  return r;
}

}  // namespace leoho
