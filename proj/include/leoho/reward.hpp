#pragma once

// Per-user multi-objective reward r = alpha*r_th - beta*r_blk - gamma*r_sw,
// the episode-level weight adaptation, and the static scalarised objective
// T - lambda1*B - lambda2*C used for offline comparisons.

#include "leoho/environment.hpp"

namespace leoho {

enum class WeightMode { static_weights, adaptive };

struct AdaptiveWeights {
  double alpha = 0.5;
  double beta = 0.3;
  double gamma = 0.2;
  WeightMode mode = WeightMode::adaptive;
};

struct AdaptationTargets {
  double target_blocking = 0.01;
  double target_handover = 0.05;  // handovers per user-slot
  double eta = 0.1;
  double alpha_min = 0.2;
  double weight_budget = 1.0;

  void validate() const;
};

struct StaticObjectiveParams {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

struct RewardBreakdown {
  double r_th = 0.0;
  int r_blk = 0;
  int r_sw = 0;
  double scalar = 0.0;
};

// r_th = rate / rate_norm clipped to [0, 1]. Throws DomainError if rate_norm <= 0.
RewardBreakdown compute_reward(const StepOutcome& outcome, const AdaptiveWeights& weights,
                               double rate_norm_bps);

// Multiplicative target tracking on beta and gamma, then alpha takes what is
// left of the budget (never below alpha_min; beta and gamma shrink
// proportionally when it would be). Static weights pass through unchanged.
AdaptiveWeights adapt_weights(const AdaptiveWeights& weights, double recent_blocking_rate,
                              double recent_handover_rate, const AdaptationTargets& targets);

// T / throughput_unit_bps - lambda1 * B - lambda2 * C.
double scalarized_objective(const EpisodeMetrics& metrics, const StaticObjectiveParams& params,
                            double throughput_unit_bps = 1.0);

}  // namespace leoho
