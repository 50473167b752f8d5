#include "leoho/agent.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "leoho/error.hpp"

namespace leoho {

double epsilon_at(const EpsilonSchedule& s, std::int64_t t) {
  if (t < 0) throw DomainError("epsilon step must be >= 0");
  return std::max(s.epsilon_min, s.epsilon0 * std::exp(-static_cast<double>(t) / s.k_decay));
}

// ---- replay -----------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (t.action < 0 || t.action >= static_cast<int>(t.mask.size()) || !t.mask[t.action])
    throw InputError("transition action " + std::to_string(t.action) + " is not valid under its mask");
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
  ++pushed_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw InputError("replay index out of range");
  return data_.size() < capacity_ ? data_[i] : data_[(next_ + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (data_.empty()) throw InputError("sampling from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

// ---- agent ------------------------------------------------------------------

void AgentConfig::validate() const {
  if (discount < 0.0 || discount >= 1.0) throw ConfigError("discount factor must lie in [0, 1)");
  if (batch_size <= 0) throw ConfigError("batch size must be positive");
  if (static_cast<std::size_t>(batch_size) > replay_capacity)
    throw ConfigError("batch size exceeds the replay capacity");
  if (target_sync_every < 1) throw ConfigError("target update frequency must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (epsilon.epsilon_min < 0.0 || epsilon.epsilon0 < epsilon.epsilon_min || epsilon.epsilon0 > 1.0)
    throw ConfigError("epsilon schedule must satisfy 0 <= end <= start <= 1");
  if (!(epsilon.k_decay > 0.0)) throw ConfigError("k_decay must be > 0");
  if (warm_start_transitions < 0) throw ConfigError("warm start transition count must be >= 0");
  if (trunk_hidden.empty()) throw ConfigError("trunk needs at least one hidden layer");
}

DuelingDdqnAgent::DuelingDdqnAgent(AgentConfig config, int input_dim, int actions, std::uint64_t seed)
    : config_(std::move(config)),
      online_(input_dim, actions, config_.trunk_hidden, config_.stream_hidden),
      buffer_(config_.replay_capacity),
      rng_(derive_seed(seed, {0xa6e47})) {
  config_.validate();
  Rng init(derive_seed(seed, {0x1417}));
  online_.initialize(init);
  target_ = online_;
  optimizer_ = AdamOptimizer(online_.parameter_count(), AdamConfig{config_.learning_rate});
}

int DuelingDdqnAgent::select_action(std::span<const double> observation, std::span<const std::uint8_t> mask) {
  return select_action(observation, mask, epsilon());
}

int DuelingDdqnAgent::select_action(std::span<const double> observation, std::span<const std::uint8_t> mask,
                                    double eps) {
  const auto q = online_.forward(observation, mask);
  return select_from_q(q, mask, eps);
}

int DuelingDdqnAgent::select_from_q(std::span<const double> q, std::span<const std::uint8_t> mask, double eps) {
  std::vector<int> valid;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) valid.push_back(static_cast<int>(i));
  if (valid.empty()) throw NoCandidateError("all action slots are masked");
  if (uniform01(rng_) < eps) return valid[uniform_index(rng_, static_cast<int>(valid.size()))];
  return masked_argmax(q, mask);
}

double DuelingDdqnAgent::ddqn_target(const Transition& t) const {
  bool any = false;
  for (auto m : t.next_mask) any = any || m;
  if (t.terminal || !any) return t.reward;
  const auto q_online = online_.forward(t.next_observation, t.next_mask);
  const int a = masked_argmax(q_online, t.next_mask);
  const auto q_target = target_.forward(t.next_observation, t.next_mask);
  return t.reward + config_.discount * q_target[a];
}

void DuelingDdqnAgent::sync_target() { target_ = online_; }

std::optional<double> DuelingDdqnAgent::learn_step() {
  const auto n = static_cast<std::size_t>(config_.batch_size);
  if (buffer_.size() < n) return std::nullopt;
  const auto idx = buffer_.sample_indices(n, rng_);
  const int in = online_.input_dim(), k = online_.actions();
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd x(in, N), xn(in, N), m(k, N), mn(k, N);
  std::vector<int> actions(n);
  std::vector<double> targets(n);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Transition& t = buffer_.raw(idx[i]);
    x.col(i) = ConstVectorMap(t.observation.data(), in);
    xn.col(i) = ConstVectorMap(t.next_observation.data(), in);
    for (int j = 0; j < k; ++j) {
      m(j, i) = t.mask[j] ? 1.0 : 0.0;
      mn(j, i) = t.next_mask[j] ? 1.0 : 0.0;
    }
    actions[i] = t.action;
  }
  const Eigen::MatrixXd q_next_online = online_.q_values(xn, &mn);
  const Eigen::MatrixXd q_next_target = target_.q_values(xn, &mn);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Transition& t = buffer_.raw(idx[i]);
    const int a = masked_argmax(std::span<const double>(q_next_online.col(i).data(), k), t.next_mask);
    targets[i] = t.terminal || a < 0 ? t.reward : t.reward + config_.discount * q_next_target(a, i);
  }
  const LossGradient lg = online_.loss_and_gradient(x, m, actions, targets);
  if (!std::isfinite(lg.loss))
    throw TrainingError("non-finite loss at learn step " + std::to_string(learn_steps_));
  optimizer_.step(online_, lg.gradient);
  ++learn_steps_;
  if (learn_steps_ % config_.target_sync_every == 0) sync_target();
  return lg.loss;
}

// ---- training loop ----------------------------------------------------------

std::size_t warm_start(DuelingDdqnAgent& agent, Environment& env, Policy& expert, std::size_t n,
                       const AdaptiveWeights& weights, std::uint64_t seed) {
  std::size_t stored = 0;
  for (std::uint64_t episode = 0; stored < n; ++episode) {
    env.reset(derive_seed(seed, {episode}));
    bool produced = false;
    while (!env.done() && stored < n) {
      const std::vector<Observation> before = env.observations();
      const auto actions = expert.act(env);
      const StepResult res = env.step(actions);
      for (int u = 0; u < env.users() && stored < n; ++u) {
        if (actions[u] == kNoAction) continue;
        const auto r = compute_reward(res.outcomes[u], weights, env.config().rate_norm_bps);
        agent.buffer().push({before[u].features, before[u].mask(), actions[u], r.scalar,
                             env.observations()[u].features, env.observations()[u].mask(), res.done});
        ++stored;
        produced = true;
      }
    }
    if (!produced && episode > 16) throw ConfigError("expert produced no transitions: users never covered");
  }
  return stored;
}

TrainingResult train(DuelingDdqnAgent& agent, Environment& env, const TrainingOptions& options) {
  if (options.episodes < 0) throw ConfigError("episode count must be >= 0");
  options.reward.targets.validate();
  TrainingResult result;
  AdaptiveWeights weights = options.reward.initial;
  result.final_weights = weights;
  if (options.episodes == 0) return result;

  if (agent.config().auto_k_decay)
    agent.mutable_config().epsilon.k_decay =
        std::max(1.0, static_cast<double>(options.episodes) * env.config().episode_slots / 3.0);

  if (agent.config().warm_start == WarmStartPolicy::mshbo && agent.config().warm_start_transitions > 0) {
    auto expert = make_baseline_policy(PolicyKind::mshbo, options.expert);
    warm_start(agent, env, *expert, static_cast<std::size_t>(agent.config().warm_start_transitions), weights,
               derive_seed(options.seed, {0x3a5e}));
  }

  const double rate_norm = env.config().rate_norm_bps;
  for (int e = 0; e < options.episodes; ++e) {
    env.reset(derive_seed(options.seed, {static_cast<std::uint64_t>(e)}));
    double reward = 0.0, loss_sum = 0.0;
    int loss_count = 0;
    while (!env.done()) {
      const double eps = agent.epsilon();
      const Eigen::MatrixXd q = user_q_values(agent.online(), env);
      const std::vector<Observation> before = env.observations();
      std::vector<int> actions(env.users(), kNoAction);
      std::vector<std::vector<std::uint8_t>> masks(env.users());
      for (int u = 0; u < env.users(); ++u) {
        masks[u] = before[u].mask();
        if (before[u].any_valid())
          actions[u] = agent.select_from_q(std::span<const double>(q.col(u).data(), q.rows()), masks[u], eps);
      }
      const StepResult res = env.step(actions);
      for (int u = 0; u < env.users(); ++u) {
        const auto r = compute_reward(res.outcomes[u], weights, rate_norm);
        reward += r.scalar;
        if (actions[u] == kNoAction) continue;
        agent.buffer().push({before[u].features, std::move(masks[u]), actions[u], r.scalar,
                             env.observations()[u].features, env.observations()[u].mask(), res.done});
      }
      std::optional<double> loss;
      try {
        loss = agent.learn_step();
      } catch (const TrainingError&) {
        if (!options.failure_checkpoint.empty()) save_checkpoint(agent.online(), options.failure_checkpoint);
        throw;
      }
      if (loss) {
        loss_sum += *loss;
        ++loss_count;
      }
      agent.advance_env_step();
    }
    const EpisodeMetrics m = episode_metrics(env.trace());
    TrainingLogRow row;
    row.episode = e;
    row.mean_reward = reward / env.users();
    row.loss = loss_count > 0 ? loss_sum / loss_count : std::numeric_limits<double>::quiet_NaN();
    row.epsilon = agent.epsilon();
    row.alpha = weights.alpha;
    row.beta = weights.beta;
    row.gamma = weights.gamma;
    row.blocking_rate = m.blocking_prob;
    row.handover_rate = m.handovers_per_user / static_cast<double>(env.episode_slots());
    result.log.push_back(row);
    weights = adapt_weights(weights, row.blocking_rate, std::min(1.0, row.handover_rate), options.reward.targets);
  }
  result.final_weights = weights;
  return result;
}

}  // namespace leoho
