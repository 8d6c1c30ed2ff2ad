#include "lemsim/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "lemsim/baselines.hpp"
#include "lemsim/checkpoint.hpp"
#include "lemsim/common.hpp"
#include "lemsim/csv.hpp"
#include "lemsim/evaluate.hpp"
#include "lemsim/report.hpp"
#include "lemsim/train.hpp"

namespace lemsim {

namespace {

namespace fs = std::filesystem;

void write_report_files(const fs::path& out_dir, const EpisodeReport& report, bool full) {
  fs::create_directories(out_dir);
  const std::string prefix = report.strategy + "_";
  write_monetary_csv((out_dir / (prefix + "monetary.csv")).string(), report);
  write_rewards_csv((out_dir / (prefix + "rewards.csv")).string(), report);
  write_prices_csv((out_dir / (prefix + "prices.csv")).string(), report);
  if (full) {
    write_trace_csv((out_dir / (prefix + "trace.csv")).string(), report);
    write_settlement_csv((out_dir / (prefix + "settlement.csv")).string(), report);
    write_trades_csv((out_dir / (prefix + "trades.csv")).string(), report);
  }
}

void print_report_summary(const EpisodeReport& report) {
  std::cout << report.strategy << ": aggregator monetary " << format_cell(report.aggregator_monetary)
            << " $, Sum P2P monetary " << format_cell(report.sum_p2p_monetary())
            << " $, Sum P2P reward " << format_cell(report.sum_p2p_reward()) << " $\n";
}

std::vector<Order> read_orders_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};

  std::vector<Order> orders;
  if (fs::path(path).extension() == ".json") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
    if (!doc.is_array()) throw DataError(path + ": expected a JSON array of orders");
    int row = 0;
    for (const auto& item : doc) {
      ++row;
      if (!item.contains("owner") || !item.contains("price") || !item.contains("quantity"))
        throw DataError(path + ": order " + std::to_string(row) +
                        " needs owner, price, quantity");
      Order o;
      o.owner = item.at("owner").get<int>();
      o.price = item.at("price").get<double>();
      o.quantity = item.at("quantity").get<double>();
      orders.push_back(o);
    }
    return orders;
  }

  CsvTable t = parse_csv(text, path);
  int owner_col = t.require_column("owner");
  int price_col = t.require_column("price");
  int qty_col = t.require_column("quantity");
  for (size_t r = 0; r < t.rows.size(); ++r) {
    Order o;
    o.owner = static_cast<int>(t.number(r, owner_col));
    o.price = t.number(r, price_col);
    o.quantity = t.number(r, qty_col);
    orders.push_back(o);
  }
  return orders;
}

int cmd_simulate(const std::string& scenario_path, const std::string& strategy,
                 const std::string& uniform_mode, const std::string& out_dir) {
  MarketScenario scenario = load_scenario(scenario_path);
  EpisodeReport report;
  if (strategy == "rb_agg") {
    report = rb_agg_run(scenario);
  } else {
    UniformPriceMode mode = UniformPriceMode::kSpreadMidpoint;
    if (uniform_mode == "forecast")
      mode = UniformPriceMode::kForecast;
    else if (uniform_mode == "realized")
      mode = UniformPriceMode::kRealized;
    else if (uniform_mode != "midpoint")
      throw DataError("unknown uniform price mode '" + uniform_mode + "'");
    report = rb_p2p_run(scenario, mode);
  }
  write_report_files(out_dir, report, /*full=*/true);
  print_report_summary(report);
  return 0;
}

int cmd_train(const std::string& scenario_path, const std::string& config_path, uint64_t seed,
              const std::string& critic_mode, int workers, const std::string& out_dir) {
  MarketScenario scenario = load_scenario(scenario_path);
  TrainConfig config = config_path.empty()
                           ? TrainConfig{}
                           : TrainConfig::from_config(KeyValueConfig::from_file(config_path));
  if (critic_mode == "lsd")
    config.critic_mode = CriticMode::kLsd;
  else if (critic_mode == "centralized")
    config.critic_mode = CriticMode::kCentralized;
  if (workers > 0) config.workers = workers;

  fs::create_directories(out_dir);
  TrainResult result = train(scenario, config, seed);
  save_policy_set((fs::path(out_dir) / "checkpoint.bin").string(), result.policies);
  write_training_log((fs::path(out_dir) / "training_log.csv").string(), result.log);

  const auto& last = result.log.rows.back();
  std::cout << "trained " << result.log.rows.size() << " episodes ("
            << result.log.env_steps << " steps), mean env step "
            << format_cell(result.log.mean_env_step_ms()) << " ms\n";
  std::cout << "last episode: r_ag " << format_cell(last.r_ag) << " $, Sum P2P ";
  double sum_p2p = 0;
  for (double r : last.r_n) sum_p2p += r;
  std::cout << format_cell(sum_p2p) << " $\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& scenario_path,
                 int episodes, int workers, const std::string& out_dir) {
  MarketScenario scenario = load_scenario(scenario_path);
  PolicySet policies = load_policy_set(checkpoint_path);
  EvalResult result = evaluate_policies(policies, scenario, episodes, EnvConfig{}, workers);
  write_report_files(out_dir, result.report, /*full=*/true);
  print_report_summary(result.report);
  return 0;
}

int cmd_clear(const std::string& orders_path, double p_min, double p_max,
              const std::string& out_dir) {
  std::vector<Order> orders = read_orders_file(orders_path);
  BiddingBounds bounds;
  bounds.p_min = p_min;
  bounds.p_max = p_max;
  ClearingOutcome outcome = clear_p2p(orders, bounds);

  std::cout << "round,price,quantity\n";
  for (const RoundTrade& t : outcome.trades)
    std::cout << (t.round + 1) << "," << format_cell(t.clearing_price) << ","
              << format_cell(t.matched_quantity) << "\n";
  std::cout << "owner,side,matched,residual,cash\n";
  for (const auto& [owner, residual] : outcome.residual_buy)
    std::cout << owner << ",buy," << format_cell(outcome.matched.at(owner)) << ","
              << format_cell(residual) << "," << format_cell(-outcome.pa.at(owner)) << "\n";
  for (const auto& [owner, residual] : outcome.residual_sell)
    std::cout << owner << ",sell," << format_cell(outcome.matched.at(owner)) << ","
              << format_cell(residual) << "," << format_cell(outcome.rv.at(owner)) << "\n";

  if (!out_dir.empty()) {
    EpisodeReport report;
    report.strategy = "clear";
    for (const auto& [owner, q] : outcome.unmatched) report.prosumer_ids.push_back(owner);
    HourRecord h;
    h.hour = 0;
    h.trades = outcome.trades;
    report.hours.push_back(h);
    fs::create_directories(out_dir);
    write_trades_csv((fs::path(out_dir) / "clear_trades.csv").string(), report);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Hierarchical DER market simulation and learning engine"};
  app.require_subcommand(1);

  std::string scenario_path, config_path, out_dir = "out", checkpoint_path, orders_path;
  std::string strategy, critic_mode, uniform_mode = "midpoint";
  uint64_t seed = 1;
  int episodes = 1, workers = 0;
  double p_min = 0, p_max = 200;

  CLI::App* simulate = app.add_subcommand("simulate", "Run a rule-based market strategy");
  simulate->add_option("--scenario", scenario_path, "scenario config file")->required();
  simulate->add_option("--strategy", strategy, "rb_agg or rb_p2p")
      ->required()
      ->check(CLI::IsMember({"rb_agg", "rb_p2p"}));
  simulate->add_option("--uniform-price-mode", uniform_mode, "midpoint|forecast|realized");
  simulate->add_option("--out-dir", out_dir, "output directory");

  CLI::App* train_cmd = app.add_subcommand("train", "Train bidding policies");
  train_cmd->add_option("--scenario", scenario_path)->required();
  train_cmd->add_option("--config", config_path, "training config file");
  train_cmd->add_option("--seed", seed, "RNG seed");
  train_cmd->add_option("--critic-mode", critic_mode, "lsd|centralized")
      ->check(CLI::IsMember({"lsd", "centralized"}));
  train_cmd->add_option("--workers", workers, "parallel follower updates");
  train_cmd->add_option("--out-dir", out_dir);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a trained checkpoint");
  evaluate->add_option("--checkpoint", checkpoint_path)->required();
  evaluate->add_option("--scenario", scenario_path)->required();
  evaluate->add_option("--episodes", episodes);
  evaluate->add_option("--workers", workers);
  evaluate->add_option("--out-dir", out_dir);

  CLI::App* clear = app.add_subcommand("clear", "Clear one hour of orders from a file");
  clear->add_option("--orders", orders_path, "CSV or JSON order list")->required();
  clear->add_option("--p-min", p_min, "price floor");
  clear->add_option("--p-max", p_max, "price cap");
  clear->add_option("--out-dir", out_dir);
  clear->add_flag("--no-out", "print only, write nothing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(scenario_path, strategy, uniform_mode, out_dir);
    if (train_cmd->parsed())
      return cmd_train(scenario_path, config_path, seed, critic_mode, workers, out_dir);
    if (evaluate->parsed())
      return cmd_evaluate(checkpoint_path, scenario_path, episodes, workers, out_dir);
    if (clear->parsed())
      return cmd_clear(orders_path, p_min, p_max,
                       clear->count("--no-out") ? std::string() : out_dir);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace lemsim
