#pragma once

#include <map>

#include "lemsim/auction.hpp"
#include "lemsim/scenario.hpp"

namespace lemsim {

// Retail quotes the aggregator posts around a reference price: it buys
// surplus at p_a_b = ref*(1-delta_b) and sells shortfall at
// p_a_s = ref*(1+delta_o).
struct AggregatorQuote {
  double p_a_b = 0;
  double p_a_s = 0;
  double delta_b = 0;
  double delta_o = 0;
  double reference_price = 0;
};

AggregatorQuote quote_prices(double reference_price, double delta_b, double delta_o,
                             double rho_max);

// All cash fields are stored as nonnegative magnitudes; direction is fixed
// by role (buyers pay pa_agg, sellers receive rv_agg, penalties flow from
// the aggregator to prosumers).
struct WholesaleSettlement {
  double q_agg_sell = 0;  // summed seller residuals, >= 0
  double q_agg_buy = 0;   // summed buyer residuals, <= 0
  double q_net = 0;       // q_agg_sell + q_agg_buy
  double wholesale_bid_price = 0;
  double realized_pw = 0;
  bool cleared = true;
  std::map<int, double> penalties;  // prosumer -> $ (zero map when cleared)
  std::map<int, double> pa_agg;     // buyer -> $ paid to aggregator
  std::map<int, double> rv_agg;     // seller -> $ received from aggregator
  double profit_ta = 0;
  double external_cash = 0;  // wholesale or utility leg, signed (+ = inflow)
};

WholesaleSettlement settle_wholesale(const std::map<int, double>& residual_buy,
                                     const std::map<int, double>& residual_sell,
                                     const AggregatorQuote& quote, double p_a_w,
                                     double realized_pw, const UtilityTariff& tariff,
                                     double penalty_price);

enum class PenaltySignMode {
  kCompensation,  // penalties reduce a buyer's cost (paid to participants)
  kLiteral,       // penalties add to a buyer's cost ledger
};

// Final per-prosumer totals for the hour: tb = buyer cost, ts = seller
// revenue, tp = whichever applies to the prosumer's role.
struct ProsumerPayout {
  double tb = 0;
  double ts = 0;
  double tp = 0;
};

std::map<int, ProsumerPayout> final_payouts(const ClearingOutcome& clearing,
                                            const WholesaleSettlement& settlement,
                                            PenaltySignMode mode = PenaltySignMode::kCompensation);

}  // namespace lemsim
