#pragma once

#include <random>
#include <string>
#include <vector>

namespace lemsim {

// One prosumer's fixed hourly energy profile. Negative quantity = buying
// need, positive = selling surplus; zero = no participation that hour.
struct ProsumerProfile {
  int id = 0;
  std::vector<double> hourly_quantity;  // MWh, signed
};

struct BiddingBounds {
  double p_min = 0.0;      // prosumer bid/offer floor, $/MWh
  double p_max = 200.0;    // prosumer bid/offer cap, $/MWh
  double p_ag_min = 0.0;   // aggregator wholesale price floor
  double p_ag_max = 100.0; // aggregator wholesale price cap
  double rho_max = 0.5;    // max markup fraction, in (0,1)
};

struct UtilityTariff {
  double utility_sell_price = 0.0;  // aggregator buys from utility at this price
  double utility_buy_price = 0.0;   // aggregator sells to utility at this price
};

// Everything needed to run one market hour, read-only.
struct HourlySnapshot {
  int hour = 0;
  std::vector<double> quantities;  // signed MWh per prosumer (profile order)
  double f_mp = 0.0;  // forecast wholesale price for this hour
  double f_ip = 0.0;  // forecast for the next hour
  double p_w = 0.0;   // realized wholesale clearing price
};

// Immutable after load; safe to share across concurrent rollout workers.
struct MarketScenario {
  int hours = 24;
  std::vector<ProsumerProfile> prosumers;
  std::vector<double> forecast_mp;  // F_MP, $/MWh per hour
  std::vector<double> forecast_ip;  // F_IP, next-hour forecast per hour
  std::vector<double> realized_pw;  // P_w, $/MWh per hour
  BiddingBounds bounds;
  UtilityTariff tariffs;
  double penalty_price = 0.0;          // $/MWh charged per unfulfilled MWh
  double train_noise_halfwidth = 0.0;  // +-h quantity perturbation in training

  HourlySnapshot snapshot(int hour) const;
  double max_abs_quantity() const;
  void validate() const;  // throws DataError on any invariant violation
};

MarketScenario load_scenario(const std::string& config_path);
void save_scenario(const MarketScenario& scenario, const std::string& config_path,
                   const std::string& csv_filename);

// Shifts every prosumer's hour-t quantity by a uniform draw in [-h, +h],
// clamped so the result keeps the profile's role sign (or zero).
std::vector<double> perturb_quantities(const MarketScenario& scenario, int hour,
                                       std::mt19937_64& rng);

}  // namespace lemsim
