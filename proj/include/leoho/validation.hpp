#pragma once

// Randomised verification suites shared by the command-line tool and the
// acceptance tests: exhaustive-optimum dominance on tiny instances and
// finite-difference gradient checks on small dueling networks.

#include <cstdint>
#include <string>
#include <vector>

#include "leoho/baselines.hpp"
#include "leoho/neuralnet.hpp"
#include "leoho/policy.hpp"
#include "leoho/reward.hpp"

namespace leoho {

// 1..3 users, 1..4 satellites, 1..4 slots, capacities 1..3, rates in
// [1, 10] Mbps with roughly 30% of links invisible.
TinyInstance random_tiny_instance(Rng& rng);

// Environment whose every reset replays the instance.
Environment tiny_environment(const TinyInstance& instance);

// Objective value of one policy episode on the instance.
double policy_value(const TinyInstance& instance, Policy& policy, const StaticObjectiveParams& params,
                    double throughput_unit_bps, std::uint64_t seed);

struct OracleCheckReport {
  int instances = 0;
  int policy_runs = 0;
  int dominance_violations = 0;
  double worst_excess = 0.0;  // max(policy value - optimum), <= tolerance when dominated
  int greedy_cases = 0;       // single-user, uncapacitated instances
  int greedy_mismatches = 0;  // rate-greedy value differs from the optimum there
  std::vector<std::string> failures;

  bool passed() const { return dominance_violations == 0 && greedy_mismatches == 0; }
};

// Every baseline plus a randomly initialised greedy-Q policy on `instances`
// random tiny instances with random non-negative lambdas. Additionally, on
// `instances` single-user uncapacitated instances with lambda = 0, the
// rate-greedy policy must attain the optimum.
OracleCheckReport oracle_check(int instances, std::uint64_t seed, double tolerance = 1e-9);

struct GradCheckSuiteReport {
  int instances = 0;
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
};

// Small random dueling networks with random masked batches.
GradCheckSuiteReport gradcheck_suite(int instances, std::uint64_t seed, double step = 1e-5);

}  // namespace leoho
