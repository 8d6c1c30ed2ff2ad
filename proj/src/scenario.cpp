#include "lemsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "lemsim/common.hpp"
#include "lemsim/config.hpp"
#include "lemsim/csv.hpp"

namespace lemsim {

namespace {

void require_nonnegative_series(const std::vector<double>& s, const std::string& name) {
  for (double v : s) {
    if (!(v >= 0.0)) throw DataError("negative or non-finite price in " + name);
  }
}

}  // namespace

HourlySnapshot MarketScenario::snapshot(int hour) const {
  if (hour < 0 || hour >= hours)
    throw DataError("hour " + std::to_string(hour) + " out of range [0," +
                    std::to_string(hours) + ")");
  HourlySnapshot snap;
  snap.hour = hour;
  snap.quantities.reserve(prosumers.size());
  for (const auto& p : prosumers) snap.quantities.push_back(p.hourly_quantity[hour]);
  snap.f_mp = forecast_mp[hour];
  snap.f_ip = forecast_ip[hour];
  snap.p_w = realized_pw[hour];
  return snap;
}

double MarketScenario::max_abs_quantity() const {
  double m = 0.0;
  for (const auto& p : prosumers)
    for (double q : p.hourly_quantity) m = std::max(m, std::abs(q));
  return m;
}

void MarketScenario::validate() const {
  if (hours <= 0) throw DataError("hours must be positive");
  auto check_len = [&](const std::vector<double>& s, const std::string& name) {
    if (static_cast<int>(s.size()) != hours)
      throw DataError("length mismatch: " + name + " has " + std::to_string(s.size()) +
                      " entries, expected " + std::to_string(hours));
  };
  check_len(forecast_mp, "f_mp");
  check_len(forecast_ip, "f_ip");
  check_len(realized_pw, "p_w");
  require_nonnegative_series(forecast_mp, "f_mp");
  require_nonnegative_series(forecast_ip, "f_ip");
  require_nonnegative_series(realized_pw, "p_w");
  for (const auto& p : prosumers) {
    if (static_cast<int>(p.hourly_quantity.size()) != hours)
      throw DataError("length mismatch: prosumer_" + std::to_string(p.id));
    for (double q : p.hourly_quantity)
      if (!std::isfinite(q)) throw DataError("non-finite quantity for prosumer_" + std::to_string(p.id));
  }
  if (!(bounds.p_min >= 0.0 && bounds.p_min < bounds.p_max))
    throw DataError("require 0 <= p_min < p_max");
  if (!(bounds.p_ag_min >= 0.0 && bounds.p_ag_min < bounds.p_ag_max))
    throw DataError("require 0 <= p_ag_min < p_ag_max");
  if (!(bounds.rho_max > 0.0 && bounds.rho_max < 1.0))
    throw DataError("rho_max must lie in (0,1)");
  if (!(tariffs.utility_sell_price >= tariffs.utility_buy_price && tariffs.utility_buy_price >= 0.0))
    throw DataError("require utility_sell_price >= utility_buy_price >= 0");
  if (!(penalty_price >= 0.0)) throw DataError("penalty_price must be >= 0");
  if (!(train_noise_halfwidth >= 0.0)) throw DataError("train_noise_halfwidth must be >= 0");
}

MarketScenario load_scenario(const std::string& config_path) {
  KeyValueConfig cfg = KeyValueConfig::from_file(config_path);
  MarketScenario s;
  s.hours = cfg.get_int("hours", 24);
  s.bounds.p_min = cfg.get_double("p_min", 0.0);
  s.bounds.p_max = cfg.get_double("p_max", 200.0);
  s.bounds.p_ag_min = cfg.get_double("p_ag_min", 0.0);
  s.bounds.p_ag_max = cfg.get_double("p_ag_max", 100.0);
  s.bounds.rho_max = cfg.get_double("rho_max", 0.5);
  s.tariffs.utility_sell_price = cfg.get_double("utility_sell_price", 0.0);
  s.tariffs.utility_buy_price = cfg.get_double("utility_buy_price", 0.0);
  s.penalty_price = cfg.get_double("penalty_price", 0.0);
  s.train_noise_halfwidth = cfg.get_double("train_noise_halfwidth", 0.0);

  std::filesystem::path dir = std::filesystem::path(config_path).parent_path();
  std::string data_name = cfg.require_string("data_csv");
  CsvTable t = read_csv((dir / data_name).string());

  int hour_col = t.require_column("hour");
  int fmp_col = t.require_column("f_mp");
  int fip_col = t.column("f_ip");
  int pw_col = t.column("p_w");

  std::vector<std::pair<int, int>> prosumer_cols;  // (id, column)
  for (size_t c = 0; c < t.header.size(); ++c) {
    const std::string& h = t.header[c];
    if (h.rfind("prosumer_", 0) == 0) {
      try {
        prosumer_cols.emplace_back(std::stoi(h.substr(9)), static_cast<int>(c));
      } catch (const std::exception&) {
        throw DataError("bad prosumer column header '" + h + "'");
      }
    }
  }
  if (prosumer_cols.empty()) throw DataError("no prosumer_<id> columns in " + data_name);
  std::sort(prosumer_cols.begin(), prosumer_cols.end());

  if (static_cast<int>(t.rows.size()) != s.hours)
    throw DataError("length mismatch: data has " + std::to_string(t.rows.size()) +
                    " rows, expected hours=" + std::to_string(s.hours));

  for (auto [id, col] : prosumer_cols) {
    ProsumerProfile p;
    p.id = id;
    p.hourly_quantity.resize(s.hours);
    s.prosumers.push_back(std::move(p));
    (void)col;
  }
  s.forecast_mp.resize(s.hours);
  s.forecast_ip.resize(s.hours);
  s.realized_pw.resize(s.hours);

  for (int r = 0; r < s.hours; ++r) {
    if (static_cast<int>(t.number(r, hour_col)) != r)
      throw DataError("hour column must run 0.." + std::to_string(s.hours - 1) +
                      " in order; row " + std::to_string(r + 2) + " differs");
    for (size_t i = 0; i < prosumer_cols.size(); ++i)
      s.prosumers[i].hourly_quantity[r] = t.number(r, prosumer_cols[i].second);
    s.forecast_mp[r] = t.number(r, fmp_col);
    if (fip_col >= 0) s.forecast_ip[r] = t.number(r, fip_col);
    if (pw_col >= 0) s.realized_pw[r] = t.number(r, pw_col);
  }

  if (fip_col < 0) {
    // F_IP is next hour's F_MP; the last hour uses the configured terminal
    // forecast (default: repeat the final F_MP).
    double terminal = cfg.get_double("terminal_forecast", s.forecast_mp.back());
    for (int r = 0; r + 1 < s.hours; ++r) s.forecast_ip[r] = s.forecast_mp[r + 1];
    s.forecast_ip[s.hours - 1] = terminal;
  }
  if (pw_col < 0) {
    double sd = cfg.get_double("pw_noise_sd", 0.0);
    if (sd > 0.0) {
      std::mt19937_64 rng(cfg.get_long("pw_noise_seed", 0));
      std::normal_distribution<double> noise(0.0, sd);
      for (int r = 0; r < s.hours; ++r)
        s.realized_pw[r] = std::max(0.0, s.forecast_mp[r] + noise(rng));
    } else {
      s.realized_pw = s.forecast_mp;
    }
  }

  s.validate();
  return s;
}

void save_scenario(const MarketScenario& scenario, const std::string& config_path,
                   const std::string& csv_filename) {
  std::filesystem::path dir = std::filesystem::path(config_path).parent_path();

  std::ofstream cfg(config_path);
  if (!cfg) throw DataError("cannot write '" + config_path + "'");
  cfg << "data_csv = " << csv_filename << "\n";
  cfg << "hours = " << scenario.hours << "\n";
  cfg << "p_min = " << format_exact(scenario.bounds.p_min) << "\n";
  cfg << "p_max = " << format_exact(scenario.bounds.p_max) << "\n";
  cfg << "p_ag_min = " << format_exact(scenario.bounds.p_ag_min) << "\n";
  cfg << "p_ag_max = " << format_exact(scenario.bounds.p_ag_max) << "\n";
  cfg << "rho_max = " << format_exact(scenario.bounds.rho_max) << "\n";
  cfg << "utility_sell_price = " << format_exact(scenario.tariffs.utility_sell_price) << "\n";
  cfg << "utility_buy_price = " << format_exact(scenario.tariffs.utility_buy_price) << "\n";
  cfg << "penalty_price = " << format_exact(scenario.penalty_price) << "\n";
  cfg << "train_noise_halfwidth = " << format_exact(scenario.train_noise_halfwidth) << "\n";

  CsvTable t;
  t.header.push_back("hour");
  for (const auto& p : scenario.prosumers)
    t.header.push_back("prosumer_" + std::to_string(p.id));
  t.header.insert(t.header.end(), {"f_mp", "f_ip", "p_w"});
  for (int r = 0; r < scenario.hours; ++r) {
    std::vector<std::string> row;
    row.push_back(std::to_string(r));
    for (const auto& p : scenario.prosumers) row.push_back(format_exact(p.hourly_quantity[r]));
    row.push_back(format_exact(scenario.forecast_mp[r]));
    row.push_back(format_exact(scenario.forecast_ip[r]));
    row.push_back(format_exact(scenario.realized_pw[r]));
    t.rows.push_back(std::move(row));
  }
  write_csv((dir / csv_filename).string(), t);
}

std::vector<double> perturb_quantities(const MarketScenario& scenario, int hour,
                                       std::mt19937_64& rng) {
  HourlySnapshot snap = scenario.snapshot(hour);
  double h = scenario.train_noise_halfwidth;
  if (h <= 0.0) return snap.quantities;
  std::uniform_real_distribution<double> draw(-h, h);
  std::vector<double> out(snap.quantities.size());
  for (size_t i = 0; i < out.size(); ++i) {
    double q = snap.quantities[i];
    double shifted = q + draw(rng);
    if (q > 0.0)
      out[i] = std::max(0.0, shifted);  // a seller never becomes a buyer
    else if (q < 0.0)
      out[i] = std::min(0.0, shifted);
    else
      out[i] = 0.0;
  }
  return out;
}

}  // namespace lemsim
