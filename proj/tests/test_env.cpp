#include "lemsim/env.hpp"

#include <doctest.h>

#include <random>

#include "lemsim/common.hpp"
#include "test_scenarios.hpp"

using namespace lemsim;

namespace {

BiddingBounds default_bounds() {
  BiddingBounds b;
  b.p_min = 0;
  b.p_max = 200;
  b.p_ag_min = 0;
  b.p_ag_max = 100;
  b.rho_max = 0.5;
  return b;
}

// Normalized action that decodes to the given price.
double action_for_price(double price, const BiddingBounds& b) {
  return (price - b.p_min) / (b.p_max - b.p_min) * 2.0 - 1.0;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("prosumer action decoding is the affine map with clamping") {
  BiddingBounds b = default_bounds();
  CHECK(decode_prosumer_action(-1, b) == doctest::Approx(0.0));
  CHECK(decode_prosumer_action(1, b) == doctest::Approx(200.0));
  CHECK(decode_prosumer_action(0, b) == doctest::Approx(100.0));

  long clamps = 0;
  CHECK(decode_prosumer_action(1.7, b, &clamps) == doctest::Approx(200.0));
  CHECK(decode_prosumer_action(-3, b, &clamps) == doctest::Approx(0.0));
  CHECK(clamps == 2);

  // Monotone in the action.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    double a1 = u(rng), a2 = u(rng);
    if (a1 > a2) std::swap(a1, a2);
    if (a1 == a2) continue;
    CHECK(decode_prosumer_action(a1, b) < decode_prosumer_action(a2, b));
  }
}

TEST_CASE("aggregator action decoding spans the declared ranges") {
  BiddingBounds b = default_bounds();
  DecodedAggregatorAction d = decode_aggregator_action(1, 0, 1, b);
  CHECK(d.p_a_w == doctest::Approx(100.0));
  CHECK(d.delta_b == doctest::Approx(0.0));
  CHECK(d.delta_o == doctest::Approx(0.5));

  DecodedAggregatorAction lo = decode_aggregator_action(0, 0.5, 0.2, b);
  CHECK(lo.p_a_w == doctest::Approx(0.0));
  CHECK(lo.delta_b == doctest::Approx(0.25));
  CHECK(lo.delta_o == doctest::Approx(0.1));

  long clamps = 0;
  DecodedAggregatorAction c = decode_aggregator_action(1.5, -0.2, 0.5, b, &clamps);
  CHECK(c.p_a_w == doctest::Approx(100.0));
  CHECK(c.delta_b == doctest::Approx(0.0));
  CHECK(clamps == 2);
}

TEST_CASE("observation normalization divides by the configured scales") {
  ScaleConfig scale{200.0, 10.0, 2000.0};
  ProsumerState s;
  s.p_a_s = 200.0;
  s.q_tot = -10.0;
  AggregatorState ag;
  Eigen::VectorXd f = normalize_observation(s, ag, scale);
  REQUIRE(f.size() == 10);
  CHECK(f(1) == doctest::Approx(1.0));
  CHECK(f(2) == doctest::Approx(-1.0));

  ProsumerState zero;
  AggregatorState zero_ag;
  CHECK(normalize_observation(zero, zero_ag, scale).norm() == 0.0);
  CHECK(normalize_observation(zero_ag, scale).norm() == 0.0);

  ag.f_mp = 100.0;
  ag.q_agg_buy = -5.0;
  Eigen::VectorXd lf = normalize_observation(ag, scale);
  REQUIRE(lf.size() == 4);
  CHECK(lf(0) == doctest::Approx(0.5));
  CHECK(lf(3) == doctest::Approx(-0.5));
}

TEST_CASE("prosumer_reward matches the worked seller and buyer traces") {
  AggregatorQuote quote = quote_prices(40, 0.25, 0.10, 0.5);  // p_a_b=30, p_a_s=44

  ClearingOutcome seller_clearing;
  seller_clearing.rv[2] = 250.0;
  seller_clearing.matched[2] = 6.0;
  seller_clearing.residual_sell[2] = 2.0;
  Order offer{2, 35.0, 8.0};
  CHECK(prosumer_reward(seller_clearing, quote, offer) == doctest::Approx(60.0));

  ClearingOutcome buyer_clearing;
  buyer_clearing.pa[1] = 320.0;
  buyer_clearing.matched[1] = 8.0;
  buyer_clearing.residual_buy[1] = 0.0;
  Order bid{1, 50.0, -8.0};
  CHECK(prosumer_reward(buyer_clearing, quote, bid) == doctest::Approx(32.0));
  // The literal printed form counts the counterfactual as an extra cost.
  CHECK(prosumer_reward(buyer_clearing, quote, bid, BuyerRewardMode::kLiteral) ==
        doctest::Approx(-672.0));

  ClearingOutcome empty;
  Order idle{3, 20.0, 5.0};
  CHECK(prosumer_reward(empty, quote, idle) == doctest::Approx(0.0));
}

TEST_CASE("uncompetitive residuals are penalized by the quote gap") {
  AggregatorQuote quote = quote_prices(40, 0.25, 0.10, 0.5);
  ClearingOutcome clearing;
  clearing.residual_sell[2] = 8.0;
  clearing.matched[2] = 0.0;
  clearing.rv[2] = 0.0;
  Order offer{2, 50.0, 8.0};  // asked 50, aggregator pays 30
  CHECK(prosumer_reward(clearing, quote, offer) == doctest::Approx(-160.0));

  clearing = ClearingOutcome{};
  clearing.residual_buy[1] = -5.0;
  clearing.matched[1] = 0.0;
  clearing.pa[1] = 0.0;
  Order bid{1, 10.0, -5.0};  // bid 10, aggregator sells at 44
  CHECK(prosumer_reward(clearing, quote, bid) == doctest::Approx(-170.0));
}

TEST_CASE("steps must alternate follower then leader") {
  MarketScenario s = testfix::flat_scenario({-10, 8});
  MarketEnv env(s, EnvConfig{}, 1);
  CHECK_THROWS_AS(env.step_leader(AggregatorAction{}), NumericalError);
  env.step_followers({ProsumerAction{0}, ProsumerAction{0}});
  CHECK_THROWS_AS(env.step_followers({ProsumerAction{0}, ProsumerAction{0}}), NumericalError);
  env.step_leader(AggregatorAction{});
  CHECK(env.hour() == 1);
}

TEST_CASE("an episode runs exactly 24 pairs and then refuses more") {
  MarketScenario s = testfix::flat_scenario({-10, 8});
  MarketEnv env(s, EnvConfig{}, 1);
  int pairs = 0;
  while (!env.done()) {
    env.step_followers({ProsumerAction{0.2}, ProsumerAction{-0.2}});
    StepOutcome out = env.step_leader(AggregatorAction{0.3, 0.4, 0.4});
    ++pairs;
    CHECK(out.done == (pairs == 24));
  }
  CHECK(pairs == 24);
  CHECK_THROWS_AS(env.step_followers({ProsumerAction{0}, ProsumerAction{0}}), NumericalError);
  env.reset();
  CHECK(env.hour() == 0);
  CHECK_FALSE(env.done());
}

TEST_CASE("zero residuals give the aggregator zero reward for any wholesale bid") {
  MarketScenario s = testfix::flat_scenario({-10, 10});
  for (double a_w : {0.0, 0.33, 1.0}) {
    MarketEnv env(s, EnvConfig{}, 1);
    // Buyer bids the cap, seller offers the floor: full match, no residuals.
    env.step_followers({ProsumerAction{1}, ProsumerAction{-1}});
    StepOutcome out = env.step_leader(AggregatorAction{a_w, 0.5, 0.5});
    CHECK(out.settlement.q_net == doctest::Approx(0.0));
    CHECK(out.aggregator_reward == doctest::Approx(0.0));
  }
}

TEST_CASE("zero markups post next-hour quotes at the forecast") {
  MarketScenario s = testfix::flat_scenario({-10, 8}, 40.0);
  EnvConfig cfg;
  cfg.initial_delta_b = 0.25;
  cfg.initial_delta_o = 0.25;
  MarketEnv env(s, cfg, 1);
  CHECK(env.posted_quote().p_a_b == doctest::Approx(30.0));
  CHECK(env.posted_quote().p_a_s == doctest::Approx(50.0));
  env.step_followers({ProsumerAction{0}, ProsumerAction{0}});
  env.step_leader(AggregatorAction{0.5, 0.0, 0.0});
  CHECK(env.posted_quote().p_a_b == doctest::Approx(40.0));
  CHECK(env.posted_quote().p_a_s == doctest::Approx(40.0));
}

TEST_CASE("trades inside the corridor earn both sides positive rewards") {
  MarketScenario s = testfix::flat_scenario({-10, 10}, 40.0);
  EnvConfig cfg;
  cfg.initial_delta_b = 0.25;  // p_a_b = 30
  cfg.initial_delta_o = 0.25;  // p_a_s = 50
  MarketEnv env(s, cfg, 1);
  BiddingBounds b = default_bounds();
  env.step_followers(
      {ProsumerAction{action_for_price(40, b)}, ProsumerAction{action_for_price(30, b)}});
  StepOutcome out = env.step_leader(AggregatorAction{0.5, 0.25, 0.25});
  // One round at the midpoint 35, fully matched.
  CHECK(out.clearing.trades.size() == 1);
  CHECK(out.clearing.trades[0].clearing_price == doctest::Approx(35.0));
  CHECK(out.follower_rewards[0] == doctest::Approx(10 * (50 - 35)));
  CHECK(out.follower_rewards[1] == doctest::Approx(10 * (35 - 30)));
}

TEST_CASE("every hour's cash flows sum to zero across all parties") {
  MarketScenario s = testfix::flat_scenario({-10, 8, -6, 5});
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> act(-1, 1);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int rep = 0; rep < 5; ++rep) {
    MarketEnv env(s, EnvConfig{}, 1);
    while (!env.done()) {
      std::vector<ProsumerAction> actions;
      for (int i = 0; i < env.n_prosumers(); ++i) actions.push_back({act(rng)});
      env.step_followers(actions);
      StepOutcome out = env.step_leader(AggregatorAction{unit(rng), unit(rng), unit(rng)});
      CHECK(std::abs(out.system_cash_residual) < 1e-6);
    }
  }
}

TEST_CASE("perturbed training quantities keep roles and reproducibility") {
  MarketScenario s = testfix::flat_scenario({-10, 8});
  s.train_noise_halfwidth = 5;
  EnvConfig cfg;
  cfg.training = true;
  MarketEnv a(s, cfg, 7), b(s, cfg, 7);
  CHECK(a.current_quantities() == b.current_quantities());
  CHECK(a.current_quantities()[0] <= 0.0);
  CHECK(a.current_quantities()[1] >= 0.0);
  MarketEnv c(s, cfg, 8);
  CHECK(a.current_quantities() != c.current_quantities());
}

TEST_CASE("state carries the previous hour's payoff into the next observation") {
  MarketScenario s = testfix::flat_scenario({-10, 10}, 40.0);
  EnvConfig cfg;
  cfg.initial_delta_b = 0.25;
  cfg.initial_delta_o = 0.25;
  MarketEnv env(s, cfg, 1);
  BiddingBounds b = default_bounds();
  CHECK(env.prosumer_state(0).tp == 0.0);
  env.step_followers(
      {ProsumerAction{action_for_price(40, b)}, ProsumerAction{action_for_price(30, b)}});
  env.step_leader(AggregatorAction{0.5, 0.25, 0.25});
  // Buyer paid 350 in P2P, no aggregator leg, no penalty.
  CHECK(env.prosumer_state(0).tp == doctest::Approx(350.0));
  CHECK(env.prosumer_state(0).p_avg == doctest::Approx(350.0 / -10.0));
  CHECK(env.prosumer_state(1).tp == doctest::Approx(350.0));
}

}  // TEST_SUITE
