#include "lemsim/env.hpp"

#include <algorithm>
#include <cmath>

#include "lemsim/common.hpp"

namespace lemsim {

namespace {

double clamp_logged(double v, double lo, double hi, long* clamps) {
  if (v < lo || v > hi) {
    if (clamps) ++*clamps;
    return std::clamp(v, lo, hi);
  }
  return v;
}

}  // namespace

double decode_prosumer_action(double a_p, const BiddingBounds& bounds, long* clamps) {
  double a = clamp_logged(a_p, -1.0, 1.0, clamps);
  return (a + 1.0) / 2.0 * (bounds.p_max - bounds.p_min) + bounds.p_min;
}

DecodedAggregatorAction decode_aggregator_action(double a_w, double a_b, double a_o,
                                                 const BiddingBounds& bounds, long* clamps) {
  DecodedAggregatorAction d;
  d.p_a_w = bounds.p_ag_min +
            clamp_logged(a_w, 0.0, 1.0, clamps) * (bounds.p_ag_max - bounds.p_ag_min);
  d.delta_b = clamp_logged(a_b, 0.0, 1.0, clamps) * bounds.rho_max;
  d.delta_o = clamp_logged(a_o, 0.0, 1.0, clamps) * bounds.rho_max;
  return d;
}

Eigen::VectorXd normalize_observation(const ProsumerState& s, const AggregatorState& ag,
                                      const ScaleConfig& scale) {
  Eigen::VectorXd f(10);
  f << s.p_a_b / scale.p_max, s.p_a_s / scale.p_max, s.q_tot / scale.quantity_scale,
      s.p_avg / scale.p_max, s.q_cm / scale.quantity_scale, s.tp / scale.cash_scale,
      ag.f_mp / scale.p_max, ag.f_ip / scale.p_max, ag.q_agg_sell / scale.quantity_scale,
      ag.q_agg_buy / scale.quantity_scale;
  return f;
}

Eigen::VectorXd normalize_observation(const AggregatorState& ag, const ScaleConfig& scale) {
  Eigen::VectorXd f(4);
  f << ag.f_mp / scale.p_max, ag.f_ip / scale.p_max, ag.q_agg_sell / scale.quantity_scale,
      ag.q_agg_buy / scale.quantity_scale;
  return f;
}

double prosumer_reward(const ClearingOutcome& clearing, const AggregatorQuote& quote,
                       const Order& order, BuyerRewardMode mode) {
  auto lookup = [](const std::map<int, double>& m, int owner) {
    auto it = m.find(owner);
    return it == m.end() ? 0.0 : it->second;
  };
  double matched = lookup(clearing.matched, order.owner);
  if (order.quantity > 0) {
    double revenue = lookup(clearing.rv, order.owner);
    double residual = lookup(clearing.residual_sell, order.owner);
    double base = revenue - matched * quote.p_a_b;
    double penalty = residual * std::max(0.0, order.price - quote.p_a_b);
    return base - penalty;
  }
  double paid = lookup(clearing.pa, order.owner);
  double residual = std::abs(lookup(clearing.residual_buy, order.owner));
  double base = mode == BuyerRewardMode::kSavings ? matched * quote.p_a_s - paid
                                                  : -paid - matched * quote.p_a_s;
  double penalty = residual * std::max(0.0, quote.p_a_s - order.price);
  return base - penalty;
}

MarketEnv::MarketEnv(const MarketScenario& scenario, EnvConfig config, uint64_t seed)
    : scenario_(scenario), config_(config), rng_(seed) {
  scenario_.validate();
  scales_.p_max = scenario_.bounds.p_max;
  scales_.quantity_scale = config_.quantity_scale > 0
                               ? config_.quantity_scale
                               : std::max(1.0, scenario_.max_abs_quantity());
  scales_.cash_scale = config_.cash_scale > 0 ? config_.cash_scale
                                              : scales_.p_max * scales_.quantity_scale;
  reset();
}

void MarketEnv::reset() {
  hour_ = 0;
  clamps_ = 0;
  prev_tp_.assign(n_prosumers(), 0.0);
  prev_pavg_.assign(n_prosumers(), 0.0);
  quote_ = quote_prices(scenario_.forecast_mp[0], config_.initial_delta_b,
                        config_.initial_delta_o, scenario_.bounds.rho_max);
  agg_state_ = AggregatorState{scenario_.forecast_mp[0], scenario_.forecast_ip[0], 0.0, 0.0};
  phase_ = Phase::kAwaitFollowers;
  begin_hour();
}

void MarketEnv::begin_hour() {
  if (config_.training && scenario_.train_noise_halfwidth > 0)
    quantities_ = perturb_quantities(scenario_, hour_, rng_);
  else
    quantities_ = scenario_.snapshot(hour_).quantities;
  orders_.clear();
  clearing_ = ClearingOutcome{};
}

ProsumerState MarketEnv::prosumer_state(int idx) const {
  ProsumerState s;
  s.p_a_b = quote_.p_a_b;
  s.p_a_s = quote_.p_a_s;
  s.q_tot = quantities_.at(idx);
  s.p_avg = prev_pavg_.at(idx);
  s.q_cm = 0;
  for (double q : quantities_) s.q_cm += q;
  s.tp = prev_tp_.at(idx);
  return s;
}

Eigen::VectorXd MarketEnv::follower_observation(int idx) const {
  if (phase_ == Phase::kDone) return Eigen::VectorXd::Zero(kFollowerObsDim);
  return normalize_observation(prosumer_state(idx), agg_state_, scales_);
}

Eigen::VectorXd MarketEnv::leader_observation() const {
  if (phase_ == Phase::kDone) return Eigen::VectorXd::Zero(kLeaderObsDim);
  return normalize_observation(agg_state_, scales_);
}

const AggregatorState& MarketEnv::step_followers(const std::vector<ProsumerAction>& actions) {
  if (phase_ != Phase::kAwaitFollowers)
    throw NumericalError("step_followers called out of order");
  if (static_cast<int>(actions.size()) != n_prosumers())
    throw DataError("expected one action per prosumer");

  orders_.clear();
  for (int i = 0; i < n_prosumers(); ++i) {
    double q = quantities_[i];
    if (q == 0.0) continue;
    Order o;
    o.owner = scenario_.prosumers[i].id;
    o.price = decode_prosumer_action(actions[i].a_p, scenario_.bounds, &clamps_);
    o.quantity = q;
    orders_.push_back(o);
  }
  clearing_ = clear_p2p(orders_, scenario_.bounds);

  agg_state_.q_agg_sell = 0;
  agg_state_.q_agg_buy = 0;
  for (const auto& [owner, q] : clearing_.residual_sell) agg_state_.q_agg_sell += q;
  for (const auto& [owner, q] : clearing_.residual_buy) agg_state_.q_agg_buy += q;
  phase_ = Phase::kAwaitLeader;
  return agg_state_;
}

StepOutcome MarketEnv::step_leader(const AggregatorAction& action) {
  if (phase_ != Phase::kAwaitLeader)
    throw NumericalError("step_leader called before step_followers");

  DecodedAggregatorAction decoded =
      decode_aggregator_action(action.a_w, action.a_b, action.a_o, scenario_.bounds, &clamps_);

  StepOutcome out;
  out.clearing = clearing_;
  out.settlement =
      settle_wholesale(clearing_.residual_buy, clearing_.residual_sell, quote_, decoded.p_a_w,
                       scenario_.realized_pw[hour_], scenario_.tariffs, scenario_.penalty_price);
  out.payouts = final_payouts(clearing_, out.settlement, config_.penalty_sign_mode);
  out.aggregator_reward = aggregator_reward(out.settlement);

  out.follower_rewards.assign(n_prosumers(), 0.0);
  std::map<int, int> index_of;
  for (int i = 0; i < n_prosumers(); ++i) index_of[scenario_.prosumers[i].id] = i;
  for (const Order& o : orders_) {
    out.follower_rewards[index_of.at(o.owner)] =
        prosumer_reward(clearing_, quote_, o, config_.buyer_reward_mode);
  }

  // All flows, counting both legs of every transfer: the P2P pool, the
  // aggregator legs, penalties, and the external counterparty.
  {
    double prosumer_net = 0;
    for (const auto& [owner, v] : clearing_.pa) prosumer_net -= v;
    for (const auto& [owner, v] : clearing_.rv) prosumer_net += v;
    for (const auto& [owner, v] : out.settlement.pa_agg) prosumer_net -= v;
    for (const auto& [owner, v] : out.settlement.rv_agg) prosumer_net += v;
    for (const auto& [owner, v] : out.settlement.penalties) prosumer_net += v;
    out.system_cash_residual =
        prosumer_net + out.settlement.profit_ta - out.settlement.external_cash;
  }

  for (int i = 0; i < n_prosumers(); ++i) {
    auto it = out.payouts.find(scenario_.prosumers[i].id);
    double tp = it == out.payouts.end() ? 0.0 : it->second.tp;
    double q = quantities_[i];
    prev_tp_[i] = tp;
    prev_pavg_[i] = q != 0.0 ? tp / q : 0.0;
  }

  ++hour_;
  out.done = hour_ >= scenario_.hours;
  if (out.done) {
    phase_ = Phase::kDone;
  } else {
    quote_ = quote_prices(scenario_.forecast_mp[hour_], decoded.delta_b, decoded.delta_o,
                          scenario_.bounds.rho_max);
    agg_state_.f_mp = scenario_.forecast_mp[hour_];
    agg_state_.f_ip = scenario_.forecast_ip[hour_];
    phase_ = Phase::kAwaitFollowers;
    begin_hour();
  }
  return out;
}

}  // namespace lemsim
