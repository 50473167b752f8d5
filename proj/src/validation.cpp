#include "leoho/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace leoho {

TinyInstance random_tiny_instance(Rng& rng) {
  TinyInstance in;
  in.users = 1 + uniform_index(rng, kOracleMaxUsers);
  in.satellites = 1 + uniform_index(rng, kOracleMaxSatellites);
  in.slots = 1 + uniform_index(rng, kOracleMaxSlots);
  in.capacity.resize(in.satellites);
  for (int& c : in.capacity) c = 1 + uniform_index(rng, 3);
  in.rates.assign(static_cast<std::size_t>(in.slots) * in.users * in.satellites, 0.0);
  for (double& r : in.rates) {
    if (uniform01(rng) < 0.7) r = 1e6 + 9e6 * uniform01(rng);
  }
  return in;
}

Environment tiny_environment(const TinyInstance& instance) {
  EnvironmentConfig cfg;
  cfg.users = instance.users;
  cfg.capacity = 1;
  cfg.episode_slots = instance.slots;
  cfg.k_max = kOracleMaxSatellites;
  cfg.rate_norm_bps = 10e6;
  cfg.visibility_norm_slots = kOracleMaxSlots;
  Scenario sc = to_scenario(instance);
  return Environment(cfg, [sc](std::uint64_t) { return sc; });
}

double policy_value(const TinyInstance& instance, Policy& policy, const StaticObjectiveParams& params,
                    double throughput_unit_bps, std::uint64_t seed) {
  Environment env = tiny_environment(instance);
  const EpisodeResult r = run_episode(env, policy, seed, AdaptiveWeights{});
  return scalarized_objective(r.metrics, params, throughput_unit_bps);
}

OracleCheckReport oracle_check(int instances, std::uint64_t seed, double tolerance) {
  OracleCheckReport rep;
  Rng rng(derive_seed(seed, {0x0c}));
  const double unit = 1e6;
  const PolicyKind kinds[] = {PolicyKind::random, PolicyKind::mvt, PolicyKind::mac,
                              PolicyKind::gbw,    PolicyKind::msh, PolicyKind::mshbo};
  BaselineParams bp;
  bp.window_slots = 3;

  for (int i = 0; i < instances; ++i) {
    const TinyInstance in = random_tiny_instance(rng);
    StaticObjectiveParams lambda{5.0 * uniform01(rng), 5.0 * uniform01(rng)};
    const double optimum = oracle_enumerate(in, lambda, unit).objective;
    ++rep.instances;

    std::vector<std::unique_ptr<Policy>> policies;
    for (auto k : kinds) policies.push_back(make_baseline_policy(k, bp, derive_seed(seed, {0x9a, std::uint64_t(i)})));
    DuelingQNet net(observation_size(kOracleMaxSatellites), kOracleMaxSatellites, {16}, {8});
    Rng init(derive_seed(seed, {0x11, std::uint64_t(i)}));
    net.initialize(init);
    policies.push_back(std::make_unique<GreedyQPolicy>(net));

    for (auto& p : policies) {
      const double v = policy_value(in, *p, lambda, unit, derive_seed(seed, {0xe7, std::uint64_t(i)}));
      ++rep.policy_runs;
      rep.worst_excess = std::max(rep.worst_excess, v - optimum);
      if (v > optimum + tolerance * std::max(1.0, std::abs(optimum))) {
        ++rep.dominance_violations;
        std::ostringstream os;
        os << "instance " << i << ": " << policy_name(p->kind()) << " value " << v << " exceeds optimum " << optimum;
        rep.failures.push_back(os.str());
      }
    }
  }

  BaselineParams greedy;
  greedy.window_slots = 1;
  greedy.gbw = {1.0, 0.0, 0.0};
  for (int i = 0; i < instances; ++i) {
    TinyInstance in = random_tiny_instance(rng);
    in.users = 1;
    in.rates.resize(static_cast<std::size_t>(in.slots) * in.satellites);
    for (double& r : in.rates) {
      if (r == 0.0 && uniform01(rng) < 0.5) r = 1e6 + 9e6 * uniform01(rng);
    }
    const double optimum = oracle_enumerate(in, StaticObjectiveParams{}, unit).objective;
    auto p = make_baseline_policy(PolicyKind::gbw, greedy);
    const double v = policy_value(in, *p, StaticObjectiveParams{}, unit, seed);
    ++rep.greedy_cases;
    if (std::abs(v - optimum) > tolerance * std::max(1.0, std::abs(optimum))) {
      ++rep.greedy_mismatches;
      std::ostringstream os;
      os << "single-user instance " << i << ": rate-greedy " << v << " vs optimum " << optimum;
      rep.failures.push_back(os.str());
    }
  }
  return rep;
}

GradCheckSuiteReport gradcheck_suite(int instances, std::uint64_t seed, double step) {
  GradCheckSuiteReport rep;
  Rng rng(derive_seed(seed, {0x9c}));
  for (int i = 0; i < instances; ++i) {
    const int input = 2 + uniform_index(rng, 7);
    const int actions = 2 + uniform_index(rng, 4);
    std::vector<int> trunk(1 + uniform_index(rng, 2));
    for (int& h : trunk) h = 3 + uniform_index(rng, 6);
    std::vector<int> stream(uniform_index(rng, 2));
    for (int& h : stream) h = 3 + uniform_index(rng, 4);
    DuelingQNet net(input, actions, trunk, stream);
    net.initialize(rng);
    // random offsets on every parameter keep pre-activations off the ReLU kink at 0
    std::vector<double> params = net.flat_parameters();
    for (double& w : params) w += 0.2 * uniform01(rng) - 0.1;
    net.set_flat_parameters(params);

    const int n = 1 + uniform_index(rng, 6);
    std::vector<std::vector<double>> obs(n, std::vector<double>(input));
    std::vector<std::vector<std::uint8_t>> masks(n, std::vector<std::uint8_t>(actions));
    std::vector<QSample> batch(n);
    for (int b = 0; b < n; ++b) {
      for (double& x : obs[b]) x = 2.0 * uniform01(rng) - 1.0;
      for (auto& m : masks[b]) m = uniform01(rng) < 0.7 ? 1 : 0;
      masks[b][uniform_index(rng, actions)] = 1;
      std::vector<int> valid;
      for (int a = 0; a < actions; ++a) {
        if (masks[b][a]) valid.push_back(a);
      }
      batch[b].observation = obs[b];
      batch[b].mask = masks[b];
      batch[b].action = valid[uniform_index(rng, static_cast<int>(valid.size()))];
      batch[b].target = 2.0 * uniform01(rng) - 1.0;
    }
    const GradCheckReport r = gradient_check(net, batch, step);
    rep.max_relative_error = std::max(rep.max_relative_error, r.max_relative_error);
    rep.parameters_checked += r.parameters_checked;
    ++rep.instances;
  }
  return rep;
}

}  // namespace leoho
