// Shared in-memory scenario fixtures.
#pragma once

#include <vector>

#include "lemsim/scenario.hpp"

namespace testfix {

// Flat-price day: every series constant, one profile column per entry of
// `quantities` (ids 1..n), all hours identical.
inline lemsim::MarketScenario flat_scenario(const std::vector<double>& quantities,
                                            double f_mp = 40.0, double p_w = 40.0,
                                            int hours = 24) {
  lemsim::MarketScenario s;
  s.hours = hours;
  for (size_t i = 0; i < quantities.size(); ++i) {
    lemsim::ProsumerProfile p;
    p.id = static_cast<int>(i) + 1;
    p.hourly_quantity.assign(hours, quantities[i]);
    s.prosumers.push_back(std::move(p));
  }
  s.forecast_mp.assign(hours, f_mp);
  s.forecast_ip.assign(hours, f_mp);
  s.realized_pw.assign(hours, p_w);
  s.bounds.p_min = 0;
  s.bounds.p_max = 200;
  s.bounds.p_ag_min = 0;
  s.bounds.p_ag_max = 100;
  s.bounds.rho_max = 0.5;
  s.tariffs.utility_sell_price = 60;
  s.tariffs.utility_buy_price = 20;
  s.penalty_price = 5;
  s.train_noise_halfwidth = 0;
  return s;
}

}  // namespace testfix
