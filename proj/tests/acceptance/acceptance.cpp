// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leoho/agent.hpp"
#include "leoho/error.hpp"
#include "leoho/experiments.hpp"
#include "leoho/validation.hpp"

namespace {

using namespace leoho;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

const AggregateRow* find_row(const std::vector<AggregateRow>& rows, const std::string& policy, int u, int c) {
  for (const auto& r : rows)
    if (r.policy == policy && r.users == u && r.capacity == c) return &r;
  return nullptr;
}

// ---- criteria ---------------------------------------------------------------

Verdict constraints() {
  Rng rng(20260001);
  long steps = 0, violations = 0, admitted = 0;
  auto check_state = [&](const Environment& env, const StepResult& res) {
    const auto& st = env.state();
    std::vector<int> count(st.loads.size(), 0);
    for (int u = 0; u < env.users(); ++u) {
      const int s = st.associations[u];
      if (s == kNoSatellite) continue;
      ++admitted;
      ++count[s];
      if (!res.outcomes[u].admitted) ++violations;
      if (env.scenario().find(st.slot - 1, u, s) == nullptr) ++violations;
    }
    for (std::size_t s = 0; s < count.size(); ++s)
      if (count[s] != st.loads[s] || st.loads[s] > st.capacities[s]) ++violations;
  };
  auto random_actions = [&](const Environment& env) {
    std::vector<int> a(env.users());
    for (int u = 0; u < env.users(); ++u) {
      const auto& o = env.observations()[u];
      if (uniform01(rng) < 0.05) {
        a[u] = uniform_index(rng, env.config().k_max + 2) - 1;  // occasionally masked or out of range
      } else {
        a[u] = o.any_valid() ? uniform_index(rng, o.valid_count()) : kNoAction;
      }
    }
    return a;
  };

  // constellation-backed cells with mixed sizes
  for (int ep = 0; steps < 8000; ++ep) {
    EnvironmentConfig cfg;
    cfg.users = 1 + uniform_index(rng, 30);
    cfg.capacity = 1 + uniform_index(rng, 9);
    cfg.k_max = 2 + uniform_index(rng, 9);
    cfg.episode_slots = 50 + uniform_index(rng, 100);
    Environment env(cfg);
    env.reset(derive_seed(77, {static_cast<std::uint64_t>(ep)}));
    while (!env.done()) {
      check_state(env, env.step(random_actions(env)));
      ++steps;
    }
  }
  // tiny instances with heterogeneous capacities
  for (int i = 0; steps < 12000; ++i) {
    const TinyInstance in = random_tiny_instance(rng);
    Environment env = tiny_environment(in);
    env.reset(static_cast<std::uint64_t>(i));
    while (!env.done()) {
      check_state(env, env.step(random_actions(env)));
      ++steps;
    }
  }
  return {violations == 0 && steps >= 10000,
          fmt("%ld steps, %ld admissions, %ld violations", steps, admitted, violations)};
}

Verdict identifiability() {
  Rng rng(20260002);
  int nets = 0;
  double worst = 0.0;
  for (; nets < 1000; ++nets) {
    const int in = 2 + uniform_index(rng, 12), actions = 2 + uniform_index(rng, 8);
    std::vector<int> trunk(1 + uniform_index(rng, 2));
    for (int& h : trunk) h = 2 + uniform_index(rng, 16);
    DuelingQNet net(in, actions, trunk, {2 + uniform_index(rng, 8)});
    net.initialize(rng);
    auto p = net.flat_parameters();
    for (auto& x : p) x += 0.1 * (2.0 * uniform01(rng) - 1.0);
    net.set_flat_parameters(p);
    std::vector<double> obs(in);
    for (auto& x : obs) x = 2.0 * uniform01(rng) - 1.0;
    const auto before = net.forward(obs);
    const double c = 100.0 * (2.0 * uniform01(rng) - 1.0);
    auto& adv = net.advantage_stream();
    adv.bias(adv.layer_count() - 1).array() += c;
    const auto after = net.forward(obs);
    for (std::size_t a = 0; a < before.size(); ++a)
      worst = std::max(worst, std::abs(after[a] - before[a]) / std::max(std::abs(before[a]), 1e-12));
  }
  return {worst <= 1e-9, fmt("%d networks, max relative change %.3g", nets, worst)};
}

Verdict gradient() {
  const auto t0 = Clock::now();
  const auto r = gradcheck_suite(25, 20260003, 1e-5);
  const double s = seconds_since(t0);
  return {r.instances >= 20 && r.max_relative_error < 1e-4 && s < 30.0,
          fmt("%d instances, %zu parameters, max relative error %.3g, %.2f s", r.instances, r.parameters_checked,
              r.max_relative_error, s)};
}

Verdict ddqn_decoupling() {
  AgentConfig cfg;
  cfg.batch_size = 1;
  cfg.replay_capacity = 8;
  cfg.trunk_hidden = {4};
  cfg.stream_hidden = {3};
  DuelingDdqnAgent agent(cfg, 2, 3, 1);
  auto set_q = [](DuelingQNet& net, double v, std::vector<double> a) {
    net.set_flat_parameters(std::vector<double>(net.parameter_count(), 0.0));
    auto& vs = net.value_stream();
    vs.bias(vs.layer_count() - 1)(0) = v;
    auto& as = net.advantage_stream();
    for (int i = 0; i < 3; ++i) as.bias(as.layer_count() - 1)(i) = a[i];
  };
  // online Q(s') = (-1, 1, 0); target Q(s') = 10 + (5, 0.5, 4) - 19/6
  set_q(agent.online(), 0.0, {1.0, 3.0, 2.0});
  set_q(agent.target(), 10.0, {5.0, 0.5, 4.0});
  Transition t;
  t.observation = {0.1, 0.2};
  t.mask = {1, 1, 1};
  t.reward = 0.25;
  t.next_observation = {0.3, 0.4};
  t.next_mask = {1, 1, 1};
  const double y = agent.ddqn_target(t);
  const double hand = 0.25 + 0.99 * (10.0 + 0.5 - 9.5 / 3.0);        // online argmax 1, target value
  const double coupled = 0.25 + 0.99 * (10.0 + 5.0 - 9.5 / 3.0);     // target argmax 0
  Transition term = t;
  term.terminal = true;
  const bool ok = std::abs(y - hand) <= 1e-12 && std::abs(y - coupled) > 1.0 && agent.ddqn_target(term) == 0.25;
  return {ok, fmt("y = %.15g, hand = %.15g, target-argmax value = %.15g", y, hand, coupled)};
}

Verdict epsilon_schedule() {
  const EpsilonSchedule s{0.2, 0.01, 1234.5};
  const double e0 = epsilon_at(s, 0);
  const double ek = epsilon_at(EpsilonSchedule{0.2, 0.01, 1000.0}, 1000);
  const double floor = epsilon_at(s, 100'000'000);
  const bool ok = std::abs(e0 - 0.2) <= 1e-12 && std::abs(ek - 0.2 * std::exp(-1.0)) <= 1e-12 &&
                  std::abs(floor - 0.01) <= 1e-12;
  return {ok, fmt("eps(0) = %.15g, eps(K) = %.15g, eps(inf) = %.15g", e0, ek, floor)};
}

Verdict oracle_dominance() {
  const auto t0 = Clock::now();
  const auto r = oracle_check(60, 20260006);
  const double s = seconds_since(t0);
  const bool equality = r.greedy_cases > 0 && r.greedy_mismatches == 0;
  return {r.instances >= 50 && r.dominance_violations == 0 && equality && s < 60.0,
          fmt("%d instances, %d policy runs, %d violations (worst excess %.3g), rate-greedy optimal on %d/%d "
              "single-user cases, %.2f s",
              r.instances, r.policy_runs, r.dominance_violations, r.worst_excess,
              r.greedy_cases - r.greedy_mismatches, r.greedy_cases, s)};
}

Verdict learning_efficacy(const fs::path& work) {
  const auto t0 = Clock::now();
  ExperimentConfig c = desk_preset();
  c.users_sweep = {4};
  c.capacity_sweep = {1};
  c.repetitions = 5;
  c.policies = {PolicyKind::random, PolicyKind::mvt, PolicyKind::mac, PolicyKind::trained};
  fs::remove_all(work);
  const auto res = run_sweep(c, work);
  const double s = seconds_since(t0);
  const auto* rnd = find_row(res.aggregates, "random", 4, 1);
  const auto* mvt = find_row(res.aggregates, "mvt", 4, 1);
  const auto* mac = find_row(res.aggregates, "mac", 4, 1);
  const auto* dq = find_row(res.aggregates, policy_name(PolicyKind::trained), 4, 1);
  if (!rnd || !mvt || !mac || !dq || dq->n != 5) return {false, "missing aggregate rows"};
  const double sd = std::max(dq->episode_reward.std, rnd->episode_reward.std);
  const double margin = (dq->episode_reward.mean - rnd->episode_reward.mean) / sd;
  const double best = std::max(mvt->episode_reward.mean, mac->episode_reward.mean);
  const bool a = margin >= 3.0;
  const bool b = dq->episode_reward.mean > best;
  return {a && b && s < 600.0,
          fmt("trained %.3f (sd %.3f), random %.3f (sd %.3f): %.1f sd margin [%s]; best of MVT %.3f / MAC %.3f "
              "[%s]; %.0f s",
              dq->episode_reward.mean, dq->episode_reward.std, rnd->episode_reward.mean, rnd->episode_reward.std,
              margin, a ? "ok" : "short", mvt->episode_reward.mean, mac->episode_reward.mean,
              b ? "beaten" : "not beaten", s)};
}

Verdict qualitative_ordering(const fs::path& work) {
  const auto t0 = Clock::now();
  ExperimentConfig c = desk_preset();
  c.users_sweep = {10, 15, 20, 25, 30};
  c.capacity_sweep = {5};
  c.repetitions = 3;
  c.policies = {PolicyKind::mac, PolicyKind::trained};
  fs::remove_all(work);
  const auto res = run_sweep(c, work);
  const double s = seconds_since(t0);
  bool monotone = true, dominated = true;
  double prev = -1.0;
  std::ostringstream detail;
  for (int u : c.users_sweep) {
    const auto* mac = find_row(res.aggregates, "mac", u, 5);
    const auto* dq = find_row(res.aggregates, policy_name(PolicyKind::trained), u, 5);
    if (!mac || !dq) return {false, "missing aggregate rows"};
    if (mac->blocking_prob.mean < prev) monotone = false;
    if (dq->blocking_prob.mean > mac->blocking_prob.mean) dominated = false;
    prev = mac->blocking_prob.mean;
    detail << "U" << u << " mac " << fmt("%.4f", mac->blocking_prob.mean) << " / trained "
           << fmt("%.4f", dq->blocking_prob.mean) << "; ";
  }
  detail << "MAC non-decreasing: " << (monotone ? "yes" : "no") << ", trained <= MAC: " << (dominated ? "yes" : "no")
         << fmt(", %.0f s", s);
  return {monotone && dominated && s < 1800.0, detail.str()};
}

Verdict determinism(const fs::path& work) {
  const auto t0 = Clock::now();
  ExperimentConfig c = desk_preset();
  fs::remove_all(work);
  run_sweep(c, work / "a");
  run_sweep(c, work / "b");
  const auto a = slurp(work / "a" / "raw_results.csv");
  const auto b = slurp(work / "b" / "raw_results.csv");
  const auto rows = std::count(a.begin(), a.end(), '\n');
  return {!a.empty() && a == b,
          fmt("%ld lines, %zu bytes, %s, %.0f s", static_cast<long>(rows), a.size(),
              a == b ? "byte-identical" : "DIFFERENT", seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::string work = (fs::temp_directory_path() / "leoho_acceptance").string();
  app.add_option("--only", only, "criterion numbers to run (default: all)");
  app.add_option("--work", work, "scratch directory for sweeps");
  CLI11_PARSE(app, argc, argv);

  const fs::path w = work;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"constraint suite", constraints},
      {"dueling identifiability", identifiability},
      {"gradient verification", gradient},
      {"ddqn decoupling", ddqn_decoupling},
      {"epsilon schedule", epsilon_schedule},
      {"oracle dominance", oracle_dominance},
      {"learning efficacy", [&] { return learning_efficacy(w / "learning"); }},
      {"qualitative ordering", [&] { return qualitative_ordering(w / "ordering"); }},
      {"determinism", [&] { return determinism(w / "determinism"); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  return failed;
}
