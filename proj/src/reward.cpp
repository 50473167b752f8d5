#include "leoho/reward.hpp"

#include <algorithm>
#include <cmath>

#include "leoho/error.hpp"

namespace leoho {

void AdaptationTargets::validate() const {
  if (!(weight_budget > 0.0)) throw ConfigError("weight_budget must be > 0");
  if (alpha_min < 0.0) throw ConfigError("alpha_min must be >= 0");
  if (alpha_min > weight_budget) throw ConfigError("alpha_min exceeds the weight budget");
  if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0");
  if (target_blocking < 0.0 || target_blocking > 1.0 || target_handover < 0.0 || target_handover > 1.0)
    throw ConfigError("adaptation targets must lie in [0, 1]");
}

RewardBreakdown compute_reward(const StepOutcome& outcome, const AdaptiveWeights& w,
                               double rate_norm_bps) {
  if (!(rate_norm_bps > 0.0)) throw DomainError("rate_norm must be > 0");
  RewardBreakdown r;
  r.r_th = outcome.admitted ? std::clamp(outcome.rate_bps / rate_norm_bps, 0.0, 1.0) : 0.0;
  r.r_blk = outcome.blocked ? 1 : 0;
  r.r_sw = outcome.handover ? 1 : 0;
  r.scalar = w.alpha * r.r_th - w.beta * r.r_blk - w.gamma * r.r_sw;
  return r;
}

AdaptiveWeights adapt_weights(const AdaptiveWeights& w, double blocking, double handover,
                              const AdaptationTargets& targets) {
  targets.validate();
  if (w.mode == WeightMode::static_weights) return w;
  if (blocking < 0.0 || blocking > 1.0 || handover < 0.0 || handover > 1.0)
    throw DomainError("observed rates must lie in [0, 1]");
  if (w.alpha < 0.0 || w.beta < 0.0 || w.gamma < 0.0) throw DomainError("weights must be non-negative");

  AdaptiveWeights out = w;
  out.beta = w.beta * std::exp(targets.eta * (blocking - targets.target_blocking));
  out.gamma = w.gamma * std::exp(targets.eta * (handover - targets.target_handover));
  const double penalty_room = targets.weight_budget - targets.alpha_min;
  const double penalties = out.beta + out.gamma;
  if (penalties > penalty_room) {
    const double k = penalty_room / penalties;
    out.beta *= k;
    out.gamma *= k;
  }
  out.alpha = targets.weight_budget - out.beta - out.gamma;
  return out;
}

double scalarized_objective(const EpisodeMetrics& m, const StaticObjectiveParams& p,
                            double throughput_unit_bps) {
  if (!(throughput_unit_bps > 0.0)) throw DomainError("throughput unit must be > 0");
  return m.throughput_bps_mean / throughput_unit_bps - p.lambda1 * m.blocking_prob -
         p.lambda2 * m.handovers_per_user;
}

}  // namespace leoho
