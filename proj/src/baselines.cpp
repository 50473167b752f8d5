#include "leoho/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "leoho/error.hpp"

namespace leoho {

namespace {

void require_candidates(std::span<const CandidateView> c) {
  if (c.empty()) throw NoCandidateError("no visible candidate satellite");
}

// Lexicographic argmax: primary key, then rate, then lower sat_id.
template <typename Key>
int lex_argmax(std::span<const CandidateView> c, Key key) {
  require_candidates(c);
  const CandidateView* best = &c[0];
  for (const auto& x : c.subspan(1)) {
    const auto kx = key(x), kb = key(*best);
    if (kx > kb || (kx == kb && (x.rate_bps > best->rate_bps ||
                                 (x.rate_bps == best->rate_bps && x.sat_id < best->sat_id))))
      best = &x;
  }
  return best->sat_id;
}

const CandidateView* find_sat(const std::vector<CandidateView>& slot, int sat) {
  for (const auto& c : slot)
    if (c.sat_id == sat) return &c;
  return nullptr;
}

int window_run_length(const LookaheadWindow& w, int sat) {
  int n = 0;
  while (n < static_cast<int>(w.slots.size()) && find_sat(w.slots[n], sat)) ++n;
  return n;
}

int msh_from(const LookaheadWindow& w, std::span<const CandidateView> pool, int prev) {
  require_candidates(pool);
  if (prev != kNoSatellite)
    for (const auto& c : pool)
      if (c.sat_id == prev) return prev;
  return lex_argmax(pool, [&](const CandidateView& c) { return window_run_length(w, c.sat_id); });
}

}  // namespace

int mvt_select(std::span<const CandidateView> candidates) {
  return lex_argmax(candidates, [](const CandidateView& c) { return c.remaining_visible_slots; });
}

int mac_select(std::span<const CandidateView> candidates) {
  return lex_argmax(candidates, [](const CandidateView& c) { return c.residual_capacity; });
}

int gbw_select(const LookaheadWindow& w, int prev, const GbwWeights& wt) {
  if (w.slots.empty() || w.slots[0].empty()) throw NoCandidateError("no visible candidate satellite");
  std::size_t depth = 0;
  while (depth < w.slots.size() && !w.slots[depth].empty()) ++depth;

  auto node = [&](const CandidateView& c) {
    const double load =
        w.capacity > 0 ? std::clamp(1.0 - static_cast<double>(c.residual_capacity) / w.capacity, 0.0, 1.0) : 1.0;
    return wt.rate * c.rate_bps / w.rate_norm_bps - wt.load * load;
  };

  // value-to-go, computed backwards over the window
  std::vector<double> next;
  for (std::size_t k = depth; k-- > 0;) {
    const auto& cur = w.slots[k];
    std::vector<double> val(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) {
      double best = 0.0;
      if (k + 1 < depth) {
        best = -std::numeric_limits<double>::infinity();
        const auto& nxt = w.slots[k + 1];
        for (std::size_t j = 0; j < nxt.size(); ++j)
          best = std::max(best, next[j] - (nxt[j].sat_id != cur[i].sat_id ? wt.handover : 0.0));
      }
      val[i] = node(cur[i]) + best;
    }
    next = std::move(val);
  }

  const auto& first = w.slots[0];
  int best_sat = kNoSatellite;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < first.size(); ++i) {
    const double switch_cost = prev != kNoSatellite && first[i].sat_id != prev ? wt.handover : 0.0;
    const double score = next[i] - switch_cost;
    if (score > best_score || (score == best_score && first[i].sat_id < best_sat)) {
      best_score = score;
      best_sat = first[i].sat_id;
    }
  }
  return best_sat;
}

int msh_select(const LookaheadWindow& w, int prev) {
  if (w.slots.empty()) throw NoCandidateError("empty lookahead window");
  return msh_from(w, w.slots[0], prev);
}

int mshbo_select(const LookaheadWindow& w, int prev) {
  if (w.slots.empty()) throw NoCandidateError("empty lookahead window");
  std::vector<CandidateView> open;
  for (const auto& c : w.slots[0])
    if (c.residual_capacity > 0) open.push_back(c);
  if (open.empty()) return msh_select(w, prev);
  return msh_from(w, open, prev);
}

std::vector<CandidateView> current_candidates(const Environment& env, int user) {
  std::vector<CandidateView> out;
  for (const auto& c : env.observations().at(user).slots)
    if (c.valid) out.push_back({c.sat_id, c.rate_bps, c.residual_capacity, c.remaining_visible_slots});
  return out;
}

LookaheadWindow make_lookahead(const Environment& env, int user, int window_slots) {
  if (window_slots < 1) throw ConfigError("lookahead window must be at least one slot");
  LookaheadWindow w;
  w.capacity = env.config().capacity;
  w.rate_norm_bps = env.config().rate_norm_bps;
  w.slots.push_back(current_candidates(env, user));
  const int t0 = env.state().slot;
  for (int k = 1; k < window_slots && t0 + k < env.episode_slots(); ++k) {
    std::vector<CandidateView> slot;
    for (const auto& l : env.scenario().candidates(t0 + k, user))
      slot.push_back({l.sat_id, l.rate_bps, env.residual_for(user, l.sat_id), l.remaining_visible_slots});
    w.slots.push_back(std::move(slot));
  }
  return w;
}

// ---- oracle -----------------------------------------------------------------

void TinyInstance::validate() const {
  if (users < 1 || satellites < 1 || slots < 1) throw ConfigError("tiny instance dimensions must be positive");
  if (static_cast<int>(capacity.size()) != satellites) throw ShapeError("capacity vector length mismatch");
  if (rates.size() != static_cast<std::size_t>(users) * satellites * slots)
    throw ShapeError("rate table size mismatch");
  for (double r : rates)
    if (r < 0.0 || !std::isfinite(r)) throw ConfigError("rates must be finite and non-negative");
  for (int c : capacity)
    if (c < 0) throw ConfigError("capacities must be non-negative");
}

namespace {

constexpr int kBlocked = -2;

struct DpEntry {
  double value = -std::numeric_limits<double>::infinity();
  int parent = -1;
  std::vector<int> choice;  // per user: sat, kBlocked, or kNoSatellite (uncovered)
};

}  // namespace

OracleResult oracle_enumerate(const TinyInstance& in, const StaticObjectiveParams& params,
                              double throughput_unit_bps) {
  in.validate();
  if (in.users > kOracleMaxUsers || in.satellites > kOracleMaxSatellites || in.slots > kOracleMaxSlots)
    throw SizeError("instance exceeds enumeration bounds (U<=3, S<=4, T<=4)");
  if (!(throughput_unit_bps > 0.0)) throw DomainError("throughput unit must be > 0");

  const int U = in.users, S = in.satellites, T = in.slots;
  const int base = S + 1;  // serving-state digit: 0 = none, s+1 = satellite s
  int states = 1;
  for (int u = 0; u < U; ++u) states *= base;

  auto digit = [&](int code, int u) {
    for (int i = 0; i < u; ++i) code /= base;
    return code % base;
  };

  std::vector<std::vector<DpEntry>> layers(T + 1, std::vector<DpEntry>(states));
  layers[0][0].value = 0.0;

  for (int t = 0; t < T; ++t) {
    for (int code = 0; code < states; ++code) {
      const DpEntry& from = layers[t][code];
      if (from.value == -std::numeric_limits<double>::infinity()) continue;
      std::vector<int> choice(U);
      std::vector<int> load(S, 0);
      // depth-first over each user's options
      auto recurse = [&](auto&& self, int u) -> void {
        if (u == U) {
          double rate = 0.0;
          int blocked = 0, handovers = 0, next = 0, mul = 1;
          for (int v = 0; v < U; ++v) {
            const int prev = digit(code, v) - 1;
            int serving = prev;
            if (choice[v] >= 0) {
              rate += in.rate(t, v, choice[v]);
              if (t >= 1 && prev >= 0 && prev != choice[v]) ++handovers;
              serving = choice[v];
            } else if (choice[v] == kBlocked) {
              ++blocked;
            }
            next += (serving + 1) * mul;
            mul *= base;
          }
          const double gain = rate / (throughput_unit_bps * T) -
                              params.lambda1 * blocked / static_cast<double>(U * T) -
                              params.lambda2 * handovers / static_cast<double>(U);
          DpEntry& to = layers[t + 1][next];
          if (from.value + gain > to.value) {
            to.value = from.value + gain;
            to.parent = code;
            to.choice = choice;
          }
          return;
        }
        bool covered = false;
        for (int s = 0; s < S; ++s) {
          if (!in.visible(t, u, s)) continue;
          covered = true;
          if (load[s] >= in.capacity[s]) continue;
          ++load[s];
          choice[u] = s;
          self(self, u + 1);
          --load[s];
        }
        choice[u] = covered ? kBlocked : kNoSatellite;
        self(self, u + 1);
      };
      recurse(recurse, 0);
    }
  }

  int best = -1;
  for (int code = 0; code < states; ++code)
    if (best < 0 || layers[T][code].value > layers[T][best].value) best = code;

  OracleResult r;
  r.objective = layers[T][best].value;
  r.associations.assign(T, std::vector<int>(U, kNoSatellite));
  r.blocked.assign(T, std::vector<bool>(U, false));
  for (int t = T, code = best; t > 0; --t) {
    const DpEntry& e = layers[t][code];
    for (int u = 0; u < U; ++u) {
      if (e.choice[u] >= 0) r.associations[t - 1][u] = e.choice[u];
      r.blocked[t - 1][u] = e.choice[u] == kBlocked;
    }
    code = e.parent;
  }
  return r;
}

Scenario to_scenario(const TinyInstance& in) {
  in.validate();
  Scenario sc(in.users, in.satellites, in.slots);
  for (int t = 0; t < in.slots; ++t)
    for (int u = 0; u < in.users; ++u)
      for (int s = 0; s < in.satellites; ++s)
        if (in.visible(t, u, s)) sc.add_link(t, u, {s, in.rate(t, u, s), 90.0, 1.0, 0});
  sc.set_capacities(in.capacity);
  sc.finalize();
  return sc;
}

}  // namespace leoho
