#include "lemsim/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace lemsim {

namespace {

EpisodeReport make_report(const MarketScenario& scenario, const std::string& strategy) {
  EpisodeReport r;
  r.strategy = strategy;
  for (const auto& p : scenario.prosumers) r.prosumer_ids.push_back(p.id);
  return r;
}

}  // namespace

EpisodeReport rb_agg_run(const MarketScenario& scenario) {
  EpisodeReport report = make_report(scenario, "rb_agg");
  const double rho = scenario.bounds.rho_max;

  for (int t = 0; t < scenario.hours; ++t) {
    HourlySnapshot snap = scenario.snapshot(t);
    HourRecord h;
    h.hour = t;
    h.f_mp = snap.f_mp;
    h.f_ip = snap.f_ip;
    h.p_w = snap.p_w;
    h.p_a_b = snap.f_mp * (1.0 - rho);
    h.p_a_s = snap.f_mp * (1.0 + rho);
    h.p_a_w = snap.p_w;  // always clears
    h.cleared = true;

    double pa_sum = 0, rv_sum = 0;
    for (size_t i = 0; i < snap.quantities.size(); ++i) {
      int id = scenario.prosumers[i].id;
      double q = snap.quantities[i];
      h.quantity[id] = q;
      h.residual[id] = q;  // everything is handled by the aggregator
      h.q_net += q;
      if (q < 0) {
        double cost = -q * h.p_a_s;
        h.pa_agg[id] = cost;
        h.monetary[id] = -cost;
        h.submitted_price[id] = scenario.bounds.p_min;
        h.reward[id] = -(-q) * std::max(0.0, h.p_a_s - scenario.bounds.p_min);
        pa_sum += cost;
      } else if (q > 0) {
        double revenue = q * h.p_a_b;
        h.rv_agg[id] = revenue;
        h.monetary[id] = revenue;
        h.submitted_price[id] = scenario.bounds.p_max;
        h.reward[id] = -q * std::max(0.0, scenario.bounds.p_max - h.p_a_b);
        rv_sum += revenue;
      } else {
        h.monetary[id] = 0;
        h.reward[id] = 0;
      }
    }
    h.external_cash = snap.p_w * h.q_net;
    h.ta = pa_sum - rv_sum + h.external_cash;
    report.hours.push_back(std::move(h));
  }
  report.accumulate_totals();
  return report;
}

EpisodeReport rb_p2p_run(const MarketScenario& scenario, UniformPriceMode mode) {
  EpisodeReport report = make_report(scenario, "rb_p2p");
  const double rho = scenario.bounds.rho_max;

  for (int t = 0; t < scenario.hours; ++t) {
    HourlySnapshot snap = scenario.snapshot(t);
    HourRecord h;
    h.hour = t;
    h.f_mp = snap.f_mp;
    h.f_ip = snap.f_ip;
    h.p_w = snap.p_w;
    h.p_a_b = snap.f_mp * (1.0 - rho);
    h.p_a_s = snap.f_mp * (1.0 + rho);
    h.p_a_w = snap.p_w;
    h.cleared = true;

    double uniform = 0;
    switch (mode) {
      case UniformPriceMode::kSpreadMidpoint: uniform = (h.p_a_b + h.p_a_s) / 2.0; break;
      case UniformPriceMode::kForecast: uniform = snap.f_mp; break;
      case UniformPriceMode::kRealized: uniform = snap.p_w; break;
    }
    uniform = std::clamp(uniform, h.p_a_b, h.p_a_s);

    double demand = 0, supply = 0;
    for (double q : snap.quantities) (q < 0 ? demand : supply) += std::abs(q);
    double matched = std::min(demand, supply);
    h.p2p_price = matched > 0 ? uniform : 0.0;
    h.p2p_volume = matched;

    double pa_sum = 0, rv_sum = 0;
    for (size_t i = 0; i < snap.quantities.size(); ++i) {
      int id = scenario.prosumers[i].id;
      double q = snap.quantities[i];
      h.quantity[id] = q;
      if (q < 0) {
        double m = demand > 0 ? -q / demand * matched : 0.0;
        double resid = -q - m;
        h.residual[id] = -resid;
        h.q_net += -resid;
        h.submitted_price[id] = uniform;
        double cost = m * uniform + resid * h.p_a_s;
        h.pa_agg[id] = resid * h.p_a_s;
        h.monetary[id] = -cost;
        h.reward[id] = m * (h.p_a_s - uniform) - resid * std::max(0.0, h.p_a_s - uniform);
        pa_sum += resid * h.p_a_s;
      } else if (q > 0) {
        double m = supply > 0 ? q / supply * matched : 0.0;
        double resid = q - m;
        h.residual[id] = resid;
        h.q_net += resid;
        h.submitted_price[id] = uniform;
        double revenue = m * uniform + resid * h.p_a_b;
        h.rv_agg[id] = resid * h.p_a_b;
        h.monetary[id] = revenue;
        h.reward[id] = m * (uniform - h.p_a_b) - resid * std::max(0.0, uniform - h.p_a_b);
        rv_sum += resid * h.p_a_b;
      } else {
        h.residual[id] = 0;
        h.monetary[id] = 0;
        h.reward[id] = 0;
      }
    }
    h.external_cash = snap.p_w * h.q_net;
    h.ta = pa_sum - rv_sum + h.external_cash;
    report.hours.push_back(std::move(h));
  }
  report.accumulate_totals();
  return report;
}

}  // namespace lemsim
