#include <doctest.h>

#include <cmath>
#include <cstring>

#include "leoho/agent.hpp"
#include "leoho/error.hpp"
#include "leoho/experiments.hpp"
#include "leoho/validation.hpp"

using namespace leoho;

namespace {

AgentConfig small_config() {
  AgentConfig c;
  c.batch_size = 32;
  c.replay_capacity = 5000;
  c.target_sync_every = 100;
  c.trunk_hidden = {32};
  c.stream_hidden = {16};
  c.warm_start = WarmStartPolicy::none;
  return c;
}

// Zero weights everywhere, so Q = value bias + advantage bias - mean.
void set_constant_q(DuelingQNet& net, double value, const std::vector<double>& adv) {
  net.set_flat_parameters(std::vector<double>(net.parameter_count(), 0.0));
  auto& v = net.value_stream();
  v.bias(v.layer_count() - 1)(0) = value;
  auto& a = net.advantage_stream();
  for (std::size_t i = 0; i < adv.size(); ++i) a.bias(a.layer_count() - 1)(static_cast<Eigen::Index>(i)) = adv[i];
}

// Two users with a clear best satellite each; every satellite holds one user.
TinyInstance training_instance() {
  TinyInstance in;
  in.users = 2;
  in.satellites = 4;
  in.slots = 20;
  in.capacity = {1, 1, 1, 1};
  in.rates.resize(static_cast<std::size_t>(in.slots) * in.users * in.satellites);
  for (int t = 0; t < in.slots; ++t)
    for (int u = 0; u < in.users; ++u)
      for (int s = 0; s < in.satellites; ++s) {
        const bool best = s == (u + t / 10) % in.satellites;
        in.rates[(static_cast<std::size_t>(t) * in.users + u) * in.satellites + s] = best ? 9e6 : 1.5e6 + 0.3e6 * s;
      }
  return in;
}

bool same_bits(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0 || (std::isnan(a) && std::isnan(b));
}

}  // namespace

TEST_CASE("epsilon schedule follows the exponential decay") {
  const EpsilonSchedule s{0.2, 0.01, 500.0};
  CHECK(std::abs(epsilon_at(s, 0) - 0.2) <= 1e-12);
  CHECK(std::abs(epsilon_at(s, 500) - 0.2 * std::exp(-1.0)) <= 1e-12);
  CHECK(std::abs(epsilon_at(s, 500) - 0.0735758882) < 1e-9);
  CHECK(std::abs(epsilon_at(s, 10'000'000) - 0.01) <= 1e-12);
  CHECK(std::abs(epsilon_at(s, 250) - 0.2 * std::exp(-0.5)) <= 1e-12);
  double prev = 1.0;
  for (std::int64_t t = 0; t < 5000; t += 37) {
    const double e = epsilon_at(s, t);
    CHECK(e <= prev);
    CHECK(e >= 0.01);
    CHECK(e <= 0.2);
    prev = e;
  }
  CHECK_THROWS_AS(epsilon_at(s, -1), DomainError);
}

TEST_CASE("agent configuration is validated") {
  auto bad = [](auto mutate) {
    AgentConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](AgentConfig& c) { c.discount = 1.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](AgentConfig& c) { c.batch_size = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](AgentConfig& c) { c.replay_capacity = 100; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](AgentConfig& c) { c.target_sync_every = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](AgentConfig& c) { c.epsilon.k_decay = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](AgentConfig& c) { c.epsilon.epsilon_min = 0.5; }).validate(), ConfigError);
  CHECK_NOTHROW(AgentConfig{}.validate());
}

TEST_CASE("forced exploration is uniform over valid slots") {
  DuelingDdqnAgent agent(small_config(), 42, 8, 1);
  const std::vector<double> obs(42, 0.1);
  const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0, 0, 0, 0};
  const int n = 10000;
  std::vector<int> count(8, 0);
  for (int i = 0; i < n; ++i) ++count[agent.select_action(obs, mask, 1.0)];
  const double p = 1.0 / 3.0, sigma = std::sqrt(n * p * (1.0 - p));
  for (int a : {0, 2, 3}) CHECK(std::abs(count[a] - n * p) <= 3.0 * sigma);
  for (int a : {1, 4, 5, 6, 7}) CHECK(count[a] == 0);
}

TEST_CASE("greedy selection takes the masked argmax with the lowest-index tie") {
  DuelingDdqnAgent agent(small_config(), 2, 4, 2);
  const std::vector<double> q{0.5, 2.0, 2.0, 1.0};
  CHECK(agent.select_from_q(q, std::vector<std::uint8_t>{1, 1, 1, 1}, 0.0) == 1);
  CHECK(agent.select_from_q(q, std::vector<std::uint8_t>{1, 0, 1, 1}, 0.0) == 2);
  CHECK(agent.select_from_q(q, std::vector<std::uint8_t>{1, 0, 0, 1}, 0.0) == 3);
  CHECK_THROWS_AS(agent.select_from_q(q, std::vector<std::uint8_t>{0, 0, 0, 0}, 0.0), NoCandidateError);

  set_constant_q(agent.online(), 0.0, {0.0, 4.0, 1.0, 4.0});
  const std::vector<double> obs{0.3, 0.7};
  CHECK(agent.select_action(obs, std::vector<std::uint8_t>{1, 1, 1, 1}, 0.0) == 1);
  CHECK(agent.select_action(obs, std::vector<std::uint8_t>{1, 0, 1, 1}, 0.0) == 3);
}

TEST_CASE("ddqn target uses the online argmax and the target evaluation") {
  AgentConfig cfg = small_config();
  cfg.batch_size = 1;
  DuelingDdqnAgent agent(cfg, 2, 3, 3);
  // online Q(s') = (-1, 1, 0): argmax slot 1
  set_constant_q(agent.online(), 0.0, {1.0, 3.0, 2.0});
  // target Q(s') = 10 + (5, 0.5, 4) - 19/6: its own argmax would be slot 0
  set_constant_q(agent.target(), 10.0, {5.0, 0.5, 4.0});

  Transition t;
  t.observation = {0.2, 0.4};
  t.mask = {1, 1, 1};
  t.action = 0;
  t.reward = 0.25;
  t.next_observation = {0.6, 0.1};
  t.next_mask = {1, 1, 1};
  // 0.25 + 0.99 * (10 + 0.5 - 9.5 / 3) = 0.25 + 0.99 * 22 / 3
  CHECK(std::abs(agent.ddqn_target(t) - 7.51) < 1e-12);
  const double dqn_style = 0.25 + 0.99 * (10.0 + 5.0 - 9.5 / 3.0);
  CHECK(std::abs(agent.ddqn_target(t) - dqn_style) > 1.0);

  // slot 1 masked: online picks slot 2 (Q = 0.5), target gives 10 + 4 - 4.5
  Transition tm = t;
  tm.next_mask = {1, 0, 1};
  CHECK(std::abs(agent.ddqn_target(tm) - (0.25 + 0.99 * 9.5)) < 1e-12);

  Transition term = t;
  term.terminal = true;
  CHECK(agent.ddqn_target(term) == 0.25);
  Transition empty = t;
  empty.next_mask = {0, 0, 0};
  CHECK(agent.ddqn_target(empty) == 0.25);

  // learn_step reports the pre-update loss: Q_online(s, 0) = -1
  agent.buffer().push(t);
  const auto loss = agent.learn_step();
  REQUIRE(loss.has_value());
  CHECK(std::abs(*loss - 8.51 * 8.51) < 1e-9);
  CHECK(agent.learn_steps() == 1);
}

TEST_CASE("learn step waits for a full batch and syncs the target periodically") {
  AgentConfig cfg = small_config();
  cfg.batch_size = 4;
  cfg.target_sync_every = 3;
  DuelingDdqnAgent agent(cfg, 3, 2, 4);
  CHECK(agent.online().flat_parameters() == agent.target().flat_parameters());
  Rng rng(9);
  auto push = [&](int i) {
    Transition t;
    t.observation = {uniform01(rng), uniform01(rng), uniform01(rng)};
    t.mask = {1, 1};
    t.action = i % 2;
    t.reward = uniform01(rng);
    t.next_observation = {uniform01(rng), uniform01(rng), uniform01(rng)};
    t.next_mask = {1, static_cast<std::uint8_t>(i % 3 != 0)};
    agent.buffer().push(t);
  };
  for (int i = 0; i < 3; ++i) push(i);
  CHECK_FALSE(agent.learn_step().has_value());
  push(3);
  const auto before = agent.target().flat_parameters();
  CHECK(agent.learn_step().has_value());
  CHECK(agent.learn_step().has_value());
  CHECK(agent.target().flat_parameters() == before);
  CHECK(agent.online().flat_parameters() != before);
  CHECK(agent.learn_step().has_value());
  CHECK(agent.learn_steps() == 3);
  CHECK(agent.target().flat_parameters() == agent.online().flat_parameters());
}

TEST_CASE("replay buffer evicts the oldest transition first") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.mask = {1};
    t.next_mask = {1};
    t.reward = i;
    buf.push(t);
  }
  CHECK(buf.size() == 3);
  CHECK(buf.total_pushed() == 5);
  CHECK(buf.at(0).reward == 2.0);
  CHECK(buf.at(1).reward == 3.0);
  CHECK(buf.at(2).reward == 4.0);
  CHECK_THROWS_AS(buf.at(3), InputError);

  Transition invalid;
  invalid.mask = {1, 0};
  invalid.action = 1;
  CHECK_THROWS_AS(buf.push(invalid), InputError);
  CHECK_THROWS_AS(ReplayBuffer(0), ConfigError);

  Rng rng(1);
  const auto idx = buf.sample_indices(300, rng);
  std::vector<int> hits(3, 0);
  for (auto i : idx) ++hits.at(i);
  for (int h : hits) CHECK(h > 50);
}

TEST_CASE("warm start stores exactly the requested expert transitions") {
  const TinyInstance in = training_instance();
  Environment env = tiny_environment(in);
  auto expert = make_baseline_policy(PolicyKind::mshbo, BaselineParams{});
  {
    DuelingDdqnAgent agent(small_config(), observation_size(env.config().k_max), env.config().k_max, 5);
    CHECK(warm_start(agent, env, *expert, 0, AdaptiveWeights{}, 1) == 0);
    CHECK(agent.buffer().size() == 0);
  }
  DuelingDdqnAgent agent(small_config(), observation_size(env.config().k_max), env.config().k_max, 5);
  CHECK(warm_start(agent, env, *expert, 500, AdaptiveWeights{}, 1) == 500);
  CHECK(agent.buffer().size() == 500);
  CHECK(agent.learn_steps() == 0);
  int terminals = 0;
  for (std::size_t i = 0; i < agent.buffer().size(); ++i) {
    const Transition& t = agent.buffer().at(i);
    CHECK(t.mask.at(t.action) == 1);
    terminals += t.terminal;
  }
  // 2 users x 20 slots per episode, one terminal slot each
  CHECK(terminals == 2 * (500 / 40));
}

TEST_CASE("zero training episodes leave the network untouched") {
  const TinyInstance in = training_instance();
  Environment env = tiny_environment(in);
  DuelingDdqnAgent agent(small_config(), observation_size(env.config().k_max), env.config().k_max, 6);
  const auto before = agent.online().flat_parameters();
  TrainingOptions opt;
  opt.episodes = 0;
  const auto r = train(agent, env, opt);
  CHECK(r.log.empty());
  CHECK(agent.online().flat_parameters() == before);
  CHECK(agent.buffer().size() == 0);
  opt.episodes = -1;
  CHECK_THROWS_AS(train(agent, env, opt), ConfigError);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  const TinyInstance in = training_instance();
  auto run = [&](std::uint64_t seed) {
    Environment env = tiny_environment(in);
    AgentConfig cfg = small_config();
    cfg.warm_start = WarmStartPolicy::mshbo;
    cfg.warm_start_transitions = 100;
    DuelingDdqnAgent agent(cfg, observation_size(env.config().k_max), env.config().k_max, seed);
    TrainingOptions opt;
    opt.episodes = 6;
    opt.seed = seed;
    auto r = train(agent, env, opt);
    return std::make_pair(r, agent.online().flat_parameters());
  };
  const auto [a, pa] = run(42);
  const auto [b, pb] = run(42);
  REQUIRE(a.log.size() == 6);
  REQUIRE(b.log.size() == 6);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(same_bits(a.log[i].mean_reward, b.log[i].mean_reward));
    CHECK(same_bits(a.log[i].loss, b.log[i].loss));
    CHECK(same_bits(a.log[i].epsilon, b.log[i].epsilon));
    CHECK(same_bits(a.log[i].beta, b.log[i].beta));
  }
  CHECK(pa == pb);
  const auto [c, pc] = run(43);
  CHECK(pc != pa);
  // the global step counter drives epsilon: 6 episodes x 20 slots, k_decay = 40
  CHECK(std::abs(a.log.back().epsilon - std::max(0.01, 0.2 * std::exp(-120.0 / 40.0))) < 1e-12);
}

TEST_CASE("adaptive training logs budget-normalised weights") {
  const TinyInstance in = training_instance();
  Environment env = tiny_environment(in);
  DuelingDdqnAgent agent(small_config(), observation_size(env.config().k_max), env.config().k_max, 8);
  TrainingOptions opt;
  opt.episodes = 10;
  const auto r = train(agent, env, opt);
  REQUIRE(r.log.size() == 10);
  CHECK(r.log[0].alpha == 0.5);
  CHECK(r.log[0].beta == 0.3);
  CHECK(r.log[0].gamma == 0.2);
  for (const auto& row : r.log) {
    CHECK(std::abs(row.alpha + row.beta + row.gamma - 1.0) < 1e-9);
    CHECK(row.blocking_rate >= 0.0);
    CHECK(row.blocking_rate <= 1.0);
  }
  CHECK(std::isnan(r.log[0].loss) == false);
}

TEST_CASE("a trained agent beats the random policy on a tiny scenario") {
  const TinyInstance in = training_instance();
  Environment env = tiny_environment(in);
  AgentConfig cfg = small_config();
  DuelingDdqnAgent agent(cfg, observation_size(env.config().k_max), env.config().k_max, 10);
  TrainingOptions opt;
  opt.episodes = 50;
  opt.seed = 10;
  opt.reward.initial.mode = WeightMode::static_weights;
  train(agent, env, opt);

  GreedyQPolicy greedy(agent.online());
  std::vector<double> trained, random;
  for (std::uint64_t s = 0; s < 5; ++s) {
    trained.push_back(run_episode(env, greedy, s, AdaptiveWeights{}).episode_reward);
    auto rnd = make_baseline_policy(PolicyKind::random, BaselineParams{}, derive_seed(s, {0x7a4d}));
    random.push_back(run_episode(env, *rnd, s, AdaptiveWeights{}).episode_reward);
  }
  const MeanStd t = mean_std(trained), r = mean_std(random);
  CHECK(t.mean > r.mean + 3.0 * std::max({t.std, r.std, 1e-9}));
}
