#pragma once

#include <Eigen/Dense>
#include <map>
#include <random>
#include <vector>

#include "lemsim/aggregator.hpp"
#include "lemsim/auction.hpp"
#include "lemsim/scenario.hpp"

namespace lemsim {

// Follower state s_n: the posted quotes, this hour's own quantity, last
// hour's average trade price and payoff, and the community net quantity.
struct ProsumerState {
  double p_a_b = 0;
  double p_a_s = 0;
  double q_tot = 0;
  double p_avg = 0;
  double q_cm = 0;
  double tp = 0;
};

// Leader state s_ag. The residual fields describe the most recently cleared
// hour; step_followers refreshes them into the partial state the leader
// acts on.
struct AggregatorState {
  double f_mp = 0;
  double f_ip = 0;
  double q_agg_sell = 0;  // summed seller residuals (>= 0)
  double q_agg_buy = 0;   // summed buyer residuals (<= 0)
};

struct ProsumerAction {
  double a_p = 0;  // normalized, [-1, 1]
};

struct AggregatorAction {
  double a_w = 0;  // normalized, [0, 1]
  double a_b = 0;
  double a_o = 0;
};

// Affine action decodings. Out-of-range inputs are clamped; when `clamps`
// is non-null the counter is bumped so callers can log how often
// exploration noise escaped the bounds.
double decode_prosumer_action(double a_p, const BiddingBounds& bounds, long* clamps = nullptr);

struct DecodedAggregatorAction {
  double p_a_w = 0;
  double delta_b = 0;
  double delta_o = 0;
};

DecodedAggregatorAction decode_aggregator_action(double a_w, double a_b, double a_o,
                                                 const BiddingBounds& bounds,
                                                 long* clamps = nullptr);

struct ScaleConfig {
  double p_max = 1;
  double quantity_scale = 1;
  double cash_scale = 1;
};

// Feature order: p_a_b, p_a_s, q_tot, p_avg, q_cm, tp, f_mp, f_ip,
// q_agg_sell, q_agg_buy. Prices divide by p_max, quantities by
// quantity_scale, cash by cash_scale.
Eigen::VectorXd normalize_observation(const ProsumerState& s, const AggregatorState& ag,
                                      const ScaleConfig& scale);
// Leader features: f_mp, f_ip, q_agg_sell, q_agg_buy.
Eigen::VectorXd normalize_observation(const AggregatorState& ag, const ScaleConfig& scale);

enum class BuyerRewardMode {
  kSavings,  // counterfactual aggregator cost minus actual P2P cost
  kLiteral,  // the printed form: minus both terms
};

// Reward for one participant's hour given its submitted order. Sellers earn
// P2P revenue above the aggregator's buy quote; buyers save against the
// aggregator's sell quote; residuals from uncompetitive prices are
// penalized by the gap to the quote.
double prosumer_reward(const ClearingOutcome& clearing, const AggregatorQuote& quote,
                       const Order& order, BuyerRewardMode mode = BuyerRewardMode::kSavings);

inline double aggregator_reward(const WholesaleSettlement& s) { return s.profit_ta; }

struct EnvConfig {
  bool training = false;  // enables the +-h quantity perturbation
  double initial_delta_b = 0;
  double initial_delta_o = 0;
  PenaltySignMode penalty_sign_mode = PenaltySignMode::kCompensation;
  BuyerRewardMode buyer_reward_mode = BuyerRewardMode::kSavings;
  double quantity_scale = 0;  // 0 = max |quantity| in the scenario (at least 1)
  double cash_scale = 0;      // 0 = p_max * quantity_scale
};

struct StepOutcome {
  std::vector<double> follower_rewards;  // by prosumer index, $
  double aggregator_reward = 0;          // $
  bool done = false;
  ClearingOutcome clearing;
  WholesaleSettlement settlement;
  std::map<int, ProsumerPayout> payouts;
  double system_cash_residual = 0;  // all flows summed; ~0 when books balance
};

// One 24-hour episode of the hierarchical market. Each hour runs as a
// follower half-step (P2P clearing at the posted quotes) and a leader
// half-step (wholesale settlement, rewards, next-hour quote posting).
class MarketEnv {
 public:
  MarketEnv(const MarketScenario& scenario, EnvConfig config, uint64_t seed);

  void reset();
  int n_prosumers() const { return static_cast<int>(scenario_.prosumers.size()); }
  static constexpr int kFollowerObsDim = 10;
  static constexpr int kLeaderObsDim = 4;
  int hour() const { return hour_; }
  bool done() const { return phase_ == Phase::kDone; }

  ProsumerState prosumer_state(int idx) const;
  const AggregatorState& aggregator_state() const { return agg_state_; }
  const AggregatorQuote& posted_quote() const { return quote_; }
  const ScaleConfig& scales() const { return scales_; }
  const std::vector<Order>& submitted_orders() const { return orders_; }
  const std::vector<double>& current_quantities() const { return quantities_; }
  long action_clamp_count() const { return clamps_; }
  const MarketScenario& scenario() const { return scenario_; }

  Eigen::VectorXd follower_observation(int idx) const;
  Eigen::VectorXd leader_observation() const;

  // Decodes prices, clears the P2P hour, and returns the partial leader
  // state with fresh residuals. Must alternate with step_leader.
  const AggregatorState& step_followers(const std::vector<ProsumerAction>& actions);

  // Settles the hour at the posted quotes, computes all rewards, posts the
  // next hour's quotes from the decoded markups, and advances time.
  StepOutcome step_leader(const AggregatorAction& action);

 private:
  enum class Phase { kAwaitFollowers, kAwaitLeader, kDone };

  void begin_hour();

  const MarketScenario& scenario_;
  EnvConfig config_;
  ScaleConfig scales_;
  std::mt19937_64 rng_;
  Phase phase_ = Phase::kAwaitFollowers;
  int hour_ = 0;
  AggregatorQuote quote_;
  AggregatorState agg_state_;
  std::vector<double> quantities_;  // this hour, perturbed in training
  std::vector<double> prev_tp_;
  std::vector<double> prev_pavg_;
  std::vector<Order> orders_;
  ClearingOutcome clearing_;
  long clamps_ = 0;
};

}  // namespace lemsim
