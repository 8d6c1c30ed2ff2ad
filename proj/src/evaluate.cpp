#include "lemsim/evaluate.hpp"

#include <memory>
#include <random>
#include <thread>

#include "lemsim/common.hpp"

namespace lemsim {

namespace {

using FollowerFn = std::function<double(int agent, const Eigen::VectorXd& obs)>;
using LeaderFn = std::function<AggregatorAction(const Eigen::VectorXd& obs)>;

EpisodeReport run_episode(const MarketScenario& scenario, const EnvConfig& config,
                          const std::string& strategy, const FollowerFn& follower_fn,
                          const LeaderFn& leader_fn) {
  MarketEnv env(scenario, config, /*seed=*/0);
  EpisodeReport report;
  report.strategy = strategy;
  for (const auto& p : scenario.prosumers) report.prosumer_ids.push_back(p.id);

  while (!env.done()) {
    HourRecord h;
    h.hour = env.hour();
    HourlySnapshot snap = scenario.snapshot(h.hour);
    h.f_mp = snap.f_mp;
    h.f_ip = snap.f_ip;
    h.p_w = snap.p_w;
    h.p_a_b = env.posted_quote().p_a_b;
    h.p_a_s = env.posted_quote().p_a_s;

    std::vector<ProsumerAction> actions(env.n_prosumers());
    for (int a = 0; a < env.n_prosumers(); ++a)
      actions[a].a_p = follower_fn(a, env.follower_observation(a));
    env.step_followers(actions);

    for (int a = 0; a < env.n_prosumers(); ++a)
      h.quantity[scenario.prosumers[a].id] = env.current_quantities()[a];
    for (const Order& o : env.submitted_orders()) h.submitted_price[o.owner] = o.price;

    AggregatorAction leader_action = leader_fn(env.leader_observation());
    StepOutcome out = env.step_leader(leader_action);

    h.p_a_w = out.settlement.wholesale_bid_price;
    h.cleared = out.settlement.cleared;
    h.q_net = out.settlement.q_net;
    h.ta = out.settlement.profit_ta;
    h.external_cash = out.settlement.external_cash;
    h.pa_agg = out.settlement.pa_agg;
    h.rv_agg = out.settlement.rv_agg;
    h.penalty = out.settlement.penalties;
    h.trades = out.clearing.trades;
    double cash = 0;
    for (const RoundTrade& t : h.trades) {
      h.p2p_volume += t.matched_quantity;
      cash += t.matched_quantity * t.clearing_price;
    }
    h.p2p_price = h.p2p_volume > 0 ? cash / h.p2p_volume : 0.0;
    for (const auto& [id, q] : out.clearing.residual_buy) h.residual[id] = q;
    for (const auto& [id, q] : out.clearing.residual_sell) h.residual[id] = q;
    for (int a = 0; a < env.n_prosumers(); ++a) {
      int id = scenario.prosumers[a].id;
      h.reward[id] = out.follower_rewards[a];
      auto it = out.payouts.find(id);
      if (it != out.payouts.end())
        h.monetary[id] = it->second.ts - it->second.tb;  // one of the two is zero
      else
        h.monetary[id] = 0;
    }
    report.hours.push_back(std::move(h));
  }
  report.accumulate_totals();
  return report;
}

EvalResult run_many(const MarketScenario& scenario, const EnvConfig& config, int episodes,
                    int workers, const std::string& strategy,
                    const std::function<std::pair<FollowerFn, LeaderFn>(int episode)>& make_fns) {
  std::vector<EpisodeReport> reports(episodes);
  auto run_range = [&](int begin, int end) {
    for (int e = begin; e < end; ++e) {
      auto [follower_fn, leader_fn] = make_fns(e);
      reports[e] = run_episode(scenario, config, strategy, follower_fn, leader_fn);
    }
  };
  workers = std::max(1, std::min(workers, episodes));
  if (workers == 1) {
    run_range(0, episodes);
  } else {
    std::vector<std::thread> pool;
    int chunk = (episodes + workers - 1) / workers;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back(run_range, w * chunk, std::min(episodes, (w + 1) * chunk));
    for (auto& t : pool) t.join();
  }

  EvalResult result;
  result.report = reports.front();
  for (auto& [id, v] : result.report.monetary) v = 0;
  for (auto& [id, v] : result.report.rewards) v = 0;
  result.report.aggregator_monetary = 0;
  result.report.aggregator_reward = 0;
  for (const EpisodeReport& r : reports) {
    result.per_episode_sum_p2p_reward.push_back(r.sum_p2p_reward());
    result.per_episode_aggregator_reward.push_back(r.aggregator_reward);
    for (const auto& [id, v] : r.monetary) result.report.monetary[id] += v / episodes;
    for (const auto& [id, v] : r.rewards) result.report.rewards[id] += v / episodes;
    result.report.aggregator_monetary += r.aggregator_monetary / episodes;
    result.report.aggregator_reward += r.aggregator_reward / episodes;
  }
  return result;
}

}  // namespace

EvalResult evaluate_policies(const PolicySet& policies, const MarketScenario& scenario,
                             int episodes, const EnvConfig& config, int workers) {
  if (static_cast<int>(policies.followers.size()) != static_cast<int>(scenario.prosumers.size()))
    throw DataError("checkpoint has " + std::to_string(policies.followers.size()) +
                    " followers but scenario has " + std::to_string(scenario.prosumers.size()) +
                    " prosumers");
  EnvConfig eval_cfg = config;
  eval_cfg.training = false;
  auto make_fns = [&](int) -> std::pair<FollowerFn, LeaderFn> {
    FollowerFn f = [&](int agent, const Eigen::VectorXd& obs) {
      return forward(policies.followers[agent].actor, obs)(0, 0);
    };
    LeaderFn l = [&](const Eigen::VectorXd& obs) {
      std::mt19937_64 unused(0);
      return leader_act(policies.leader, obs, unused, /*stochastic=*/false).action;
    };
    return {f, l};
  };
  return run_many(scenario, eval_cfg, episodes, workers, "marl", make_fns);
}

EvalResult evaluate_random(const MarketScenario& scenario, int episodes, uint64_t seed,
                           const EnvConfig& config, int workers) {
  EnvConfig eval_cfg = config;
  eval_cfg.training = false;
  auto make_fns = [&, seed](int episode) -> std::pair<FollowerFn, LeaderFn> {
    auto rng = std::make_shared<std::mt19937_64>(seed + static_cast<uint64_t>(episode));
    FollowerFn f = [rng](int, const Eigen::VectorXd&) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      return u(*rng);
    };
    LeaderFn l = [rng](const Eigen::VectorXd&) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      AggregatorAction a;
      a.a_w = u(*rng);
      a.a_b = u(*rng);
      a.a_o = u(*rng);
      return a;
    };
    return {f, l};
  };
  return run_many(scenario, eval_cfg, episodes, workers, "random", make_fns);
}

}  // namespace lemsim
