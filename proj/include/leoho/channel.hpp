#pragma once

// Noise-limited free-space link budget and Shannon rate.

namespace leoho {

// 10*log10(Boltzmann constant) in dBW/K/Hz.
inline constexpr double kBoltzmannDbw = -228.6;

enum class InterferenceMode { none, fixed_margin_db };

struct LinkBudgetParams {
  double bandwidth_hz = 10e6;
  double carrier_ghz = 12.0;
  double eirp_dbw = 21.0;
  double rx_gain_over_temp_db = 10.0;  // G/T in dB/K
  double noise_bandwidth_factor = 1.0;
  InterferenceMode interference_mode = InterferenceMode::none;
  double interference_margin_db = 0.0;  // used when interference_mode == fixed_margin_db

  void validate() const;
};

struct RateSample {
  int user_id = 0;
  int sat_id = 0;
  double sinr_linear = 0.0;
  double rate_bps = 0.0;
};

// 92.45 + 20 log10(d_km) + 20 log10(f_GHz). Throws DomainError on non-positive input.
double free_space_path_loss_db(double slant_range_km, double carrier_ghz);

// EIRP - FSPL + G/T - k - 10 log10(B * noise factor) [- margin].
double link_budget_db(const LinkBudgetParams& params, double slant_range_km);

// Linear SINR. `fading_gain` is a multiplicative per-link factor, 1 when fading is off.
double sinr(const LinkBudgetParams& params, double slant_range_km, double fading_gain = 1.0);

// B * log2(1 + sinr). Throws DomainError on negative SINR.
double achievable_rate(const LinkBudgetParams& params, double sinr_linear);

RateSample rate_sample(const LinkBudgetParams& params, int user_id, int sat_id, double slant_range_km);

}  // namespace leoho
