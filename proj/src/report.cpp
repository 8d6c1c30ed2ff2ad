#include "lemsim/report.hpp"

#include <fstream>

#include "lemsim/common.hpp"
#include "lemsim/csv.hpp"

namespace lemsim {

namespace {
double lookup(const std::map<int, double>& m, int key) {
  auto it = m.find(key);
  return it == m.end() ? 0.0 : it->second;
}
}  // namespace

double EpisodeReport::sum_p2p_monetary() const {
  double s = 0;
  for (const auto& [id, v] : monetary) s += v;
  return s;
}

double EpisodeReport::sum_p2p_reward() const {
  double s = 0;
  for (const auto& [id, v] : rewards) s += v;
  return s;
}

void EpisodeReport::accumulate_totals() {
  monetary.clear();
  rewards.clear();
  aggregator_monetary = 0;
  aggregator_reward = 0;
  for (int id : prosumer_ids) {
    monetary[id] = 0;
    rewards[id] = 0;
  }
  for (const HourRecord& h : hours) {
    aggregator_monetary += h.ta;
    aggregator_reward += h.ta;
    for (int id : prosumer_ids) {
      monetary[id] += lookup(h.monetary, id);
      rewards[id] += lookup(h.reward, id);
    }
  }
}

namespace {

void write_agent_table(const std::string& path, const EpisodeReport& report,
                       const std::map<int, double>& per_prosumer, double aggregator,
                       double sum_p2p) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "agent," << report.strategy << "\n";
  out << "Aggregator," << format_cell(aggregator) << "\n";
  for (int id : report.prosumer_ids)
    out << "prosumer_" << id << "," << format_cell(lookup(per_prosumer, id)) << "\n";
  out << "Sum P2P," << format_cell(sum_p2p) << "\n";
}

}  // namespace

void write_monetary_csv(const std::string& path, const EpisodeReport& report) {
  write_agent_table(path, report, report.monetary, report.aggregator_monetary,
                    report.sum_p2p_monetary());
}

void write_rewards_csv(const std::string& path, const EpisodeReport& report) {
  write_agent_table(path, report, report.rewards, report.aggregator_reward,
                    report.sum_p2p_reward());
}

void write_prices_csv(const std::string& path, const EpisodeReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "hour,f_mp,p_w,p_a_b,p_a_s,p2p_price,p2p_volume";
  for (int id : report.prosumer_ids) out << ",price_" << id;
  out << "\n";
  for (const HourRecord& h : report.hours) {
    out << h.hour << "," << format_cell(h.f_mp) << "," << format_cell(h.p_w) << ","
        << format_cell(h.p_a_b) << "," << format_cell(h.p_a_s) << "," << format_cell(h.p2p_price)
        << "," << format_cell(h.p2p_volume);
    for (int id : report.prosumer_ids) out << "," << format_cell(lookup(h.submitted_price, id));
    out << "\n";
  }
}

void write_trace_csv(const std::string& path, const EpisodeReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "hour,p_a_b,p_a_s,p_w,p2p_price";
  for (int id : report.prosumer_ids) out << ",price_" << id;
  for (int id : report.prosumer_ids) out << ",residual_" << id;
  for (int id : report.prosumer_ids) out << ",reward_" << id;
  out << "\n";
  for (const HourRecord& h : report.hours) {
    out << h.hour << "," << format_cell(h.p_a_b) << "," << format_cell(h.p_a_s) << ","
        << format_cell(h.p_w) << "," << format_cell(h.p2p_price);
    for (int id : report.prosumer_ids) out << "," << format_cell(lookup(h.submitted_price, id));
    for (int id : report.prosumer_ids) out << "," << format_cell(lookup(h.residual, id));
    for (int id : report.prosumer_ids) out << "," << format_cell(lookup(h.reward, id));
    out << "\n";
  }
}

void write_settlement_csv(const std::string& path, const EpisodeReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "hour,prosumer,q_net,p_a_w,p_w,cleared,ta,external_cash,residual,pa_agg,rv_agg,penalty\n";
  for (const HourRecord& h : report.hours) {
    out << h.hour << ",," << format_cell(h.q_net) << "," << format_cell(h.p_a_w) << ","
        << format_cell(h.p_w) << "," << (h.cleared ? 1 : 0) << "," << format_cell(h.ta) << ","
        << format_cell(h.external_cash) << ",,,,\n";
    for (int id : report.prosumer_ids) {
      out << h.hour << "," << id << ",,,,,,," << format_cell(lookup(h.residual, id)) << ","
          << format_cell(lookup(h.pa_agg, id)) << "," << format_cell(lookup(h.rv_agg, id)) << ","
          << format_cell(lookup(h.penalty, id)) << "\n";
    }
  }
}

void write_trades_csv(const std::string& path, const EpisodeReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "hour,round,price,quantity";
  for (int id : report.prosumer_ids) out << ",buy_" << id;
  for (int id : report.prosumer_ids) out << ",sell_" << id;
  out << "\n";
  for (const HourRecord& h : report.hours) {
    for (const RoundTrade& t : h.trades) {
      out << h.hour << "," << t.round << "," << format_cell(t.clearing_price) << ","
          << format_cell(t.matched_quantity);
      for (int id : report.prosumer_ids) out << "," << format_cell(lookup(t.buyer_fills, id));
      for (int id : report.prosumer_ids) out << "," << format_cell(lookup(t.seller_fills, id));
      out << "\n";
    }
  }
}

}  // namespace lemsim
