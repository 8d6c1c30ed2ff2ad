#pragma once

#include <map>
#include <string>
#include <vector>

#include "lemsim/auction.hpp"

namespace lemsim {

// Everything recorded for one market hour, shared by baselines and the
// policy evaluator.
struct HourRecord {
  int hour = 0;
  double f_mp = 0, f_ip = 0, p_w = 0;
  double p_a_b = 0, p_a_s = 0;  // posted quotes
  double p_a_w = 0;             // aggregator wholesale bid
  bool cleared = true;
  double q_net = 0;
  double ta = 0;
  double external_cash = 0;
  double p2p_price = 0;   // volume-weighted trade price (0 when no volume)
  double p2p_volume = 0;
  std::vector<RoundTrade> trades;         // empty for rule-based strategies
  std::map<int, double> submitted_price;  // prosumer -> bid/offer price
  std::map<int, double> quantity;         // prosumer -> signed q
  std::map<int, double> residual;         // prosumer -> signed leftover
  std::map<int, double> pa_agg, rv_agg, penalty;
  std::map<int, double> reward;
  std::map<int, double> monetary;  // signed: buyer cost negative, seller revenue positive
};

struct EpisodeReport {
  std::string strategy;
  std::vector<int> prosumer_ids;
  std::vector<HourRecord> hours;
  std::map<int, double> monetary;  // per-prosumer episode totals, signed
  double aggregator_monetary = 0;
  std::map<int, double> rewards;
  double aggregator_reward = 0;

  double sum_p2p_monetary() const;
  double sum_p2p_reward() const;
  void accumulate_totals();  // fills totals from the hour records
};

// Tables 3/4-style layout: rows = Aggregator, each prosumer, Sum P2P; one
// value column named after the strategy.
void write_monetary_csv(const std::string& path, const EpisodeReport& report);
void write_rewards_csv(const std::string& path, const EpisodeReport& report);
// hour, f_mp, p_w, p_a_b, p_a_s, p2p_price, p2p_volume, price_<id>...
void write_prices_csv(const std::string& path, const EpisodeReport& report);
// hour, p_a_b, p_a_s, p_w, p2p_price, then per-prosumer price/residual/reward.
void write_trace_csv(const std::string& path, const EpisodeReport& report);
// Hour rows plus per-prosumer rows sharing one header.
void write_settlement_csv(const std::string& path, const EpisodeReport& report);
// One row per auction round: hour, round, price, quantity, buy/sell fills.
void write_trades_csv(const std::string& path, const EpisodeReport& report);

}  // namespace lemsim
