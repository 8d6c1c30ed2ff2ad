#include "lemsim/aggregator.hpp"

#include <cmath>
#include <string>

#include "lemsim/common.hpp"

namespace lemsim {

AggregatorQuote quote_prices(double reference_price, double delta_b, double delta_o,
                             double rho_max) {
  if (!(reference_price >= 0))
    throw DataError("reference price must be >= 0");
  if (!(delta_b >= 0 && delta_b <= rho_max) || !(delta_o >= 0 && delta_o <= rho_max))
    throw DataError("markup outside [0, rho_max]");
  AggregatorQuote q;
  q.reference_price = reference_price;
  q.delta_b = delta_b;
  q.delta_o = delta_o;
  q.p_a_b = reference_price * (1.0 - delta_b);
  q.p_a_s = reference_price * (1.0 + delta_o);
  return q;
}

WholesaleSettlement settle_wholesale(const std::map<int, double>& residual_buy,
                                     const std::map<int, double>& residual_sell,
                                     const AggregatorQuote& quote, double p_a_w,
                                     double realized_pw, const UtilityTariff& tariff,
                                     double penalty_price) {
  if (penalty_price < 0) throw DataError("penalty price must be >= 0");
  WholesaleSettlement s;
  s.wholesale_bid_price = p_a_w;
  s.realized_pw = realized_pw;

  for (const auto& [owner, q] : residual_buy) {
    if (q > kQuantityEps)
      throw DataError("buyer residual for prosumer_" + std::to_string(owner) + " is positive");
    s.q_agg_buy += q;
  }
  for (const auto& [owner, q] : residual_sell) {
    if (q < -kQuantityEps)
      throw DataError("seller residual for prosumer_" + std::to_string(owner) + " is negative");
    s.q_agg_sell += q;
  }
  s.q_net = s.q_agg_sell + s.q_agg_buy;

  // A net seller clears by offering no higher than the realized price, a net
  // buyer by bidding no lower; ties clear. A flat position clears vacuously.
  if (s.q_net > 0)
    s.cleared = p_a_w <= realized_pw;
  else if (s.q_net < 0)
    s.cleared = p_a_w >= realized_pw;
  else
    s.cleared = true;

  // Prosumer-side settlement at the posted quotes happens on both paths;
  // only the external leg and the penalties differ.
  for (const auto& [owner, q] : residual_buy)
    if (q < 0) s.pa_agg[owner] = -q * quote.p_a_s;
  for (const auto& [owner, q] : residual_sell)
    if (q > 0) s.rv_agg[owner] = q * quote.p_a_b;

  if (s.cleared) {
    s.external_cash = realized_pw * s.q_net;
  } else {
    for (const auto& [owner, q] : residual_buy)
      if (q < 0) s.penalties[owner] = penalty_price * -q;
    for (const auto& [owner, q] : residual_sell)
      if (q > 0) s.penalties[owner] = penalty_price * q;
    double utility_price =
        s.q_net > 0 ? tariff.utility_buy_price : tariff.utility_sell_price;
    s.external_cash = utility_price * s.q_net;
  }

  double pa_sum = 0, rv_sum = 0, pn_sum = 0;
  for (const auto& [owner, v] : s.pa_agg) pa_sum += v;
  for (const auto& [owner, v] : s.rv_agg) rv_sum += v;
  for (const auto& [owner, v] : s.penalties) pn_sum += v;
  s.profit_ta = pa_sum - rv_sum + s.external_cash - pn_sum;
  return s;
}

std::map<int, ProsumerPayout> final_payouts(const ClearingOutcome& clearing,
                                            const WholesaleSettlement& settlement,
                                            PenaltySignMode mode) {
  auto known = [&](int owner) {
    return clearing.pa.count(owner) || clearing.rv.count(owner);
  };
  for (const auto& [owner, v] : settlement.pa_agg)
    if (!known(owner))
      throw DataError("prosumer_" + std::to_string(owner) +
                      " present in settlement but absent from clearing");
  for (const auto& [owner, v] : settlement.rv_agg)
    if (!known(owner))
      throw DataError("prosumer_" + std::to_string(owner) +
                      " present in settlement but absent from clearing");

  auto lookup = [](const std::map<int, double>& m, int owner) {
    auto it = m.find(owner);
    return it == m.end() ? 0.0 : it->second;
  };

  std::map<int, ProsumerPayout> out;
  for (const auto& [owner, pa] : clearing.pa) {
    ProsumerPayout p;
    double pn = lookup(settlement.penalties, owner);
    double signed_pn = mode == PenaltySignMode::kCompensation ? -pn : pn;
    p.tb = pa + lookup(settlement.pa_agg, owner) + signed_pn;
    p.tp = p.tb;
    out[owner] = p;
  }
  for (const auto& [owner, rv] : clearing.rv) {
    ProsumerPayout p;
    p.ts = rv + lookup(settlement.rv_agg, owner) + lookup(settlement.penalties, owner);
    p.tp = p.ts;
    out[owner] = p;
  }
  return out;
}

}  // namespace lemsim
