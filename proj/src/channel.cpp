#include "leoho/channel.hpp"

#include <cmath>

#include "leoho/error.hpp"

namespace leoho {

void LinkBudgetParams::validate() const {
  if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth_hz must be > 0");
  if (!(carrier_ghz > 0.0)) throw ConfigError("carrier_ghz must be > 0");
  if (!(noise_bandwidth_factor > 0.0)) throw ConfigError("noise_bandwidth_factor must be > 0");
}

double free_space_path_loss_db(double slant_range_km, double carrier_ghz) {
  if (!(slant_range_km > 0.0) || !(carrier_ghz > 0.0))
    throw DomainError("free-space path loss needs positive range and frequency");
  return 92.45 + 20.0 * std::log10(slant_range_km) + 20.0 * std::log10(carrier_ghz);
}

double link_budget_db(const LinkBudgetParams& p, double slant_range_km) {
  const double noise_db = kBoltzmannDbw + 10.0 * std::log10(p.bandwidth_hz * p.noise_bandwidth_factor);
  double snr_db = p.eirp_dbw - free_space_path_loss_db(slant_range_km, p.carrier_ghz) +
                  p.rx_gain_over_temp_db - noise_db;
  if (p.interference_mode == InterferenceMode::fixed_margin_db) snr_db -= p.interference_margin_db;
  return snr_db;
}

double sinr(const LinkBudgetParams& p, double slant_range_km, double fading_gain) {
  return std::pow(10.0, link_budget_db(p, slant_range_km) / 10.0) * fading_gain;
}

double achievable_rate(const LinkBudgetParams& p, double sinr_linear) {
  if (sinr_linear < 0.0 || std::isnan(sinr_linear)) throw DomainError("SINR must be non-negative");
  return p.bandwidth_hz * std::log2(1.0 + sinr_linear);
}

RateSample rate_sample(const LinkBudgetParams& p, int user_id, int sat_id, double slant_range_km) {
  const double s = sinr(p, slant_range_km);
  return {user_id, sat_id, s, achievable_rate(p, s)};
}

}  // namespace leoho
