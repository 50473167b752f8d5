#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "leoho/baselines.hpp"
#include "leoho/error.hpp"
#include "leoho/policy.hpp"
#include "leoho/validation.hpp"

using namespace leoho;

namespace {

std::vector<CandidateView> random_candidates(Rng& rng, int n) {
  std::vector<int> ids(12);
  for (int i = 0; i < 12; ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<CandidateView> c;
  for (int i = 0; i < n; ++i) {
    // coarse values so that ties on every key occur
    c.push_back({ids[i], 1e6 * (1 + uniform_index(rng, 3)), uniform_index(rng, 3), uniform_index(rng, 4)});
  }
  return c;
}

// Sort by (key desc, rate desc, sat_id asc) and take the head.
int sort_oracle(std::vector<CandidateView> c, std::function<int(const CandidateView&)> key) {
  std::sort(c.begin(), c.end(), [&](const CandidateView& a, const CandidateView& b) {
    if (key(a) != key(b)) return key(a) > key(b);
    if (a.rate_bps != b.rate_bps) return a.rate_bps > b.rate_bps;
    return a.sat_id < b.sat_id;
  });
  return c.front().sat_id;
}

LookaheadWindow window_of(std::vector<std::vector<CandidateView>> slots, int capacity = 2, double norm = 1e7) {
  LookaheadWindow w;
  w.capacity = capacity;
  w.rate_norm_bps = norm;
  w.slots = std::move(slots);
  return w;
}

bool in_slot(const std::vector<CandidateView>& slot, int sat) {
  return std::any_of(slot.begin(), slot.end(), [&](const CandidateView& c) { return c.sat_id == sat; });
}

}  // namespace

TEST_CASE("mvt picks the longest remaining visibility") {
  const std::vector<CandidateView> one{{5, 2e6, 1, 3}};
  CHECK(mvt_select(one) == 5);
  const std::vector<CandidateView> tied{{0, 9e6, 1, 3}, {1, 4e6, 1, 7}, {2, 6e6, 1, 7}};
  CHECK(mvt_select(tied) == 2);
  CHECK_THROWS_AS(mvt_select(std::vector<CandidateView>{}), NoCandidateError);

  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto c = random_candidates(rng, 1 + uniform_index(rng, 8));
    CHECK(mvt_select(c) == sort_oracle(c, [](const CandidateView& x) { return x.remaining_visible_slots; }));
  }
}

TEST_CASE("mac picks the largest residual capacity") {
  const std::vector<CandidateView> one_free{{0, 9e6, 0, 5}, {1, 2e6, 2, 1}, {2, 8e6, 0, 9}};
  CHECK(mac_select(one_free) == 1);
  const std::vector<CandidateView> equal{{3, 2e6, 1, 5}, {4, 7e6, 1, 1}, {1, 7e6, 1, 2}};
  CHECK(mac_select(equal) == 1);
  CHECK_THROWS_AS(mac_select(std::vector<CandidateView>{}), NoCandidateError);

  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto c = random_candidates(rng, 1 + uniform_index(rng, 8));
    CHECK(mac_select(c) == sort_oracle(c, [](const CandidateView& x) { return x.residual_capacity; }));
  }
}

TEST_CASE("msh and mshbo keep the serving satellite unless mshbo sees it full") {
  // sat 4 serving: visible with capacity, and visible but full
  const auto open = window_of({{{4, 2e6, 1, 2}, {7, 9e6, 1, 9}}, {{4, 2e6, 1, 1}, {7, 9e6, 1, 8}}});
  CHECK(msh_select(open, 4) == 4);
  CHECK(mshbo_select(open, 4) == 4);
  const auto full = window_of({{{4, 2e6, 0, 2}, {7, 9e6, 1, 9}}, {{4, 2e6, 0, 1}, {7, 9e6, 1, 8}}});
  CHECK(msh_select(full, 4) == 4);
  CHECK(mshbo_select(full, 4) == 7);
  // everything full: mshbo falls back to msh
  const auto all_full = window_of({{{4, 2e6, 0, 2}, {7, 9e6, 0, 9}}});
  CHECK(mshbo_select(all_full, 4) == msh_select(all_full, 4));
  CHECK_THROWS_AS(msh_select(window_of({{}}), kNoSatellite), NoCandidateError);
  CHECK_THROWS_AS(mshbo_select(window_of({}), kNoSatellite), NoCandidateError);
}

TEST_CASE("msh forced change matches a longest-run oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int depth = 1 + uniform_index(rng, 5);
    std::vector<std::vector<CandidateView>> slots(depth);
    for (int k = 0; k < depth; ++k)
      for (int s = 0; s < 5; ++s)
        if (k == 0 ? s < 3 || uniform01(rng) < 0.5 : uniform01(rng) < 0.6)
          slots[k].push_back({s, 1e6 * (1 + uniform_index(rng, 3)), 1, 1});
    const auto w = window_of(slots);
    // prev 9 is never visible: a forced change
    const int pick = msh_select(w, 9);
    auto run = [&](int sat) {
      int n = 0;
      while (n < depth && in_slot(slots[n], sat)) ++n;
      return n;
    };
    int best_run = 0;
    for (const auto& c : slots[0]) best_run = std::max(best_run, run(c.sat_id));
    CHECK(run(pick) == best_run);
    const auto expected = sort_oracle(slots[0], [&](const CandidateView& x) { return run(x.sat_id); });
    CHECK(pick == expected);
  }
}

TEST_CASE("mshbo never picks a full satellite while a free one exists") {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    auto c = random_candidates(rng, 1 + uniform_index(rng, 6));
    const bool any_free = std::any_of(c.begin(), c.end(), [](const CandidateView& x) { return x.residual_capacity > 0; });
    const int prev = uniform01(rng) < 0.5 ? c[uniform_index(rng, static_cast<int>(c.size()))].sat_id : kNoSatellite;
    const int pick = mshbo_select(window_of({c}), prev);
    const auto it = std::find_if(c.begin(), c.end(), [&](const CandidateView& x) { return x.sat_id == pick; });
    REQUIRE(it != c.end());
    if (any_free) CHECK(it->residual_capacity > 0);
  }
}

TEST_CASE("gbw with one slot is a weighted greedy choice") {
  const GbwWeights wt{1.0, 0.0, 0.5};
  const std::vector<CandidateView> c{{0, 5e6, 2, 1}, {1, 6e6, 0, 1}, {2, 4e6, 1, 1}};
  // scores: 0.5 - 0, 0.6 - 0.5, 0.4 - 0.25
  CHECK(gbw_select(window_of({c}), kNoSatellite, wt) == 0);
  const GbwWeights rate_only{1.0, 0.0, 0.0};
  CHECK(gbw_select(window_of({c}), kNoSatellite, rate_only) == 1);
  CHECK_THROWS_AS(gbw_select(window_of({{}}), kNoSatellite, wt), NoCandidateError);
}

TEST_CASE("gbw with a huge handover weight keeps the serving satellite") {
  Rng rng(5);
  const GbwWeights sticky{1.0, 1e6, 0.5};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<CandidateView>> slots(3);
    for (auto& slot : slots)
      for (int s = 0; s < 4; ++s) slot.push_back({s, 1e6 + 9e6 * uniform01(rng), uniform_index(rng, 3), 3});
    const int prev = uniform_index(rng, 4);
    CHECK(gbw_select(window_of(slots), prev, sticky) == prev);
  }
}

TEST_CASE("gbw first hop matches exhaustive path enumeration") {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const GbwWeights wt{uniform01(rng) * 2.0, uniform01(rng), uniform01(rng)};
    std::vector<std::vector<CandidateView>> slots(3);
    for (auto& slot : slots)
      for (int s = 0; s < 3; ++s)
        if (&slot == &slots[0] || uniform01(rng) < 0.8)
          slot.push_back({s, 1e6 + 9e6 * uniform01(rng), uniform_index(rng, 3), 3});
    const auto w = window_of(slots);
    const int prev = uniform01(rng) < 0.3 ? kNoSatellite : uniform_index(rng, 3);
    std::size_t depth = 0;
    while (depth < slots.size() && !slots[depth].empty()) ++depth;

    double best = -1e300;
    int best_first = -1;
    std::vector<const CandidateView*> path;
    std::function<void(std::size_t)> walk = [&](std::size_t k) {
      if (k == depth) {
        double v = 0.0;
        int last = prev;
        for (const auto* c : path) {
          v += wt.rate * c->rate_bps / w.rate_norm_bps -
               wt.load * (1.0 - static_cast<double>(c->residual_capacity) / w.capacity);
          if (last != kNoSatellite && c->sat_id != last) v -= wt.handover;
          last = c->sat_id;
        }
        if (v > best + 1e-12) {
          best = v;
          best_first = path[0]->sat_id;
        }
        return;
      }
      for (const auto& c : slots[k]) {
        path.push_back(&c);
        walk(k + 1);
        path.pop_back();
      }
    };
    walk(0);
    CHECK(gbw_select(w, prev, wt) == best_first);
  }
}

TEST_CASE("uncapacitated one-slot gbw with rate weight only is rate argmax") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    auto c = random_candidates(rng, 1 + uniform_index(rng, 8));
    for (auto& x : c) {
      x.rate_bps = 1e6 + 9e6 * uniform01(rng);
      x.residual_capacity = 1'000'000;
    }
    const auto w = window_of({c}, 1'000'000);
    const auto it = std::max_element(c.begin(), c.end(),
                                      [](const CandidateView& a, const CandidateView& b) { return a.rate_bps < b.rate_bps; });
    CHECK(gbw_select(w, kNoSatellite, GbwWeights{1.0, 0.0, 0.0}) == it->sat_id);
  }
}

TEST_CASE("oracle on hand instances") {
  TinyInstance single;
  single.users = 1;
  single.satellites = 1;
  single.slots = 1;
  single.capacity = {1};
  single.rates = {7e6};
  const auto r1 = oracle_enumerate(single, {0.0, 0.0}, 1e6);
  CHECK(r1.objective == doctest::Approx(7.0));
  CHECK(r1.associations[0][0] == 0);

  // two users, one satellite of capacity 1: someone is blocked
  TinyInstance pigeon;
  pigeon.users = 2;
  pigeon.satellites = 1;
  pigeon.slots = 1;
  pigeon.capacity = {1};
  pigeon.rates = {8e6, 3e6};
  const auto r2 = oracle_enumerate(pigeon, {2.0, 0.0}, 1e6);
  // serve user 0: 8 - 2 * (1 blocked / 2 user-slots)
  CHECK(r2.objective == doctest::Approx(7.0));
  CHECK(r2.associations[0][0] == 0);
  CHECK(r2.associations[0][1] == kNoSatellite);
  CHECK(r2.blocked[0][1]);
  CHECK_FALSE(r2.blocked[0][0]);

  TinyInstance big = single;
  big.users = 4;
  big.rates.assign(4, 1e6);
  CHECK_THROWS_AS(oracle_enumerate(big, {}, 1e6), SizeError);
}

TEST_CASE("oracle bounds every baseline on random tiny instances") {
  const auto report = oracle_check(60, 2024);
  CHECK(report.instances == 60);
  CHECK(report.dominance_violations == 0);
  CHECK(report.greedy_cases > 0);
  CHECK(report.greedy_mismatches == 0);
  CHECK(report.passed());
}

TEST_CASE("every baseline returns a currently visible candidate") {
  Rng rng(8);
  const PolicyKind kinds[] = {PolicyKind::random, PolicyKind::mvt, PolicyKind::mac,
                              PolicyKind::gbw,    PolicyKind::msh, PolicyKind::mshbo};
  for (int trial = 0; trial < 40; ++trial) {
    const TinyInstance in = random_tiny_instance(rng);
    for (auto k : kinds) {
      Environment env = tiny_environment(in);
      auto policy = make_baseline_policy(k, BaselineParams{}, 5);
      env.reset(trial);
      while (!env.done()) {
        const auto actions = policy->act(env);
        REQUIRE(static_cast<int>(actions.size()) == env.users());
        for (int u = 0; u < env.users(); ++u) {
          const auto& obs = env.observations()[u];
          if (!obs.any_valid()) {
            CHECK(actions[u] == kNoAction);
          } else {
            REQUIRE(actions[u] >= 0);
            CHECK(obs.mask()[actions[u]] == 1);
          }
        }
        env.step(actions);
      }
      CHECK(episode_metrics(env.trace()).invalid_actions == 0);
    }
  }
}

TEST_CASE("policy names round-trip") {
  for (auto k : {PolicyKind::random, PolicyKind::mvt, PolicyKind::mac, PolicyKind::gbw, PolicyKind::msh,
                 PolicyKind::mshbo, PolicyKind::trained})
    CHECK(parse_policy_kind(policy_name(k)) == k);
  CHECK_THROWS_AS(parse_policy_kind("nope"), ConfigError);
  CHECK_THROWS_AS(make_baseline_policy(PolicyKind::trained, BaselineParams{}), ConfigError);
}
