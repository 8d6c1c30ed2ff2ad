#include "lemsim/baselines.hpp"

#include <doctest.h>

#include <random>

#include "test_scenarios.hpp"

using namespace lemsim;

namespace {

MarketScenario random_scenario(std::mt19937_64& rng, int n_prosumers) {
  MarketScenario s = testfix::flat_scenario(std::vector<double>(n_prosumers, 1.0));
  std::uniform_real_distribution<double> price(10.0, 60.0);
  std::uniform_real_distribution<double> qty(0.0, 15.0);
  std::bernoulli_distribution side(0.5);
  for (int h = 0; h < s.hours; ++h) {
    s.forecast_mp[h] = price(rng);
    s.forecast_ip[h] = price(rng);
    s.realized_pw[h] = price(rng);
    for (auto& p : s.prosumers)
      p.hourly_quantity[h] = side(rng) ? qty(rng) : -qty(rng);
  }
  return s;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("rb_agg single-buyer hour matches the closed form") {
  MarketScenario s = testfix::flat_scenario({-10.0}, 40.0, 40.0, 1);
  EpisodeReport r = rb_agg_run(s);
  CHECK(r.monetary.at(1) == doctest::Approx(-600.0));  // 10 * 40 * 1.5
  CHECK(r.aggregator_monetary == doctest::Approx(200.0));
  CHECK(r.hours[0].cleared);
}

TEST_CASE("rb_agg symmetric buyer and seller yield 2*q*P*rho profit") {
  for (double q : {3.0, 7.5, 12.0}) {
    MarketScenario s = testfix::flat_scenario({-q, q}, 40.0, 40.0, 1);
    EpisodeReport r = rb_agg_run(s);
    CHECK(r.aggregator_monetary == doctest::Approx(2 * q * 40.0 * 0.5));
  }
}

TEST_CASE("rb_agg profit equals rho*P*|q| summed when forecasts are exact") {
  std::mt19937_64 rng(8);
  MarketScenario s = random_scenario(rng, 4);
  s.realized_pw = s.forecast_mp;
  EpisodeReport r = rb_agg_run(s);
  double expect = 0;
  for (int h = 0; h < s.hours; ++h)
    for (const auto& p : s.prosumers)
      expect += 0.5 * s.realized_pw[h] * std::abs(p.hourly_quantity[h]);
  CHECK(r.aggregator_monetary == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("rb_agg rewards are nonpositive and the aggregator's is positive") {
  std::mt19937_64 rng(9);
  MarketScenario s = random_scenario(rng, 4);
  EpisodeReport r = rb_agg_run(s);
  CHECK(r.aggregator_reward > 0.0);
  for (const auto& [id, reward] : r.rewards) CHECK(reward <= 0.0);
}

TEST_CASE("all-zero quantities produce all-zero tables") {
  MarketScenario s = testfix::flat_scenario({0.0, 0.0});
  EpisodeReport agg = rb_agg_run(s);
  EpisodeReport p2p = rb_p2p_run(s);
  CHECK(agg.aggregator_monetary == 0.0);
  CHECK(agg.sum_p2p_monetary() == 0.0);
  CHECK(p2p.aggregator_monetary == 0.0);
  CHECK(p2p.sum_p2p_reward() == 0.0);
}

TEST_CASE("rb_p2p splits the uniform trade proportionally") {
  MarketScenario s = testfix::flat_scenario({-6.0, -4.0, 5.0, 5.0}, 40.0, 40.0, 1);
  EpisodeReport r = rb_p2p_run(s);
  const HourRecord& h = r.hours[0];
  CHECK(h.p2p_price == doctest::Approx(40.0));
  CHECK(h.p2p_volume == doctest::Approx(10.0));
  CHECK(r.monetary.at(1) == doctest::Approx(-240.0));
  CHECK(r.monetary.at(2) == doctest::Approx(-160.0));
  CHECK(r.monetary.at(3) == doctest::Approx(200.0));
  CHECK(r.monetary.at(4) == doctest::Approx(200.0));
  CHECK(h.q_net == doctest::Approx(0.0));
}

TEST_CASE("rb_p2p routes excess demand to the aggregator at max markup") {
  MarketScenario s = testfix::flat_scenario({-6.0, -4.0, 6.0}, 40.0, 40.0, 1);
  EpisodeReport r = rb_p2p_run(s);
  // Buyers matched 3.6 and 2.4 at price 40; residuals 2.4 and 1.6 at 60.
  CHECK(r.monetary.at(1) == doctest::Approx(-(3.6 * 40 + 2.4 * 60)));
  CHECK(r.monetary.at(2) == doctest::Approx(-(2.4 * 40 + 1.6 * 60)));
  CHECK(r.monetary.at(3) == doctest::Approx(240.0));
  CHECK(r.hours[0].residual.at(1) == doctest::Approx(-2.4));
}

TEST_CASE("a one-sided hour degenerates to the aggregator-only cash flows") {
  MarketScenario s = testfix::flat_scenario({-6.0, -4.0}, 40.0, 40.0, 1);
  EpisodeReport agg = rb_agg_run(s);
  EpisodeReport p2p = rb_p2p_run(s);
  CHECK(p2p.monetary.at(1) == doctest::Approx(agg.monetary.at(1)));
  CHECK(p2p.monetary.at(2) == doctest::Approx(agg.monetary.at(2)));
  CHECK(p2p.aggregator_monetary == doctest::Approx(agg.aggregator_monetary));
}

TEST_CASE("both baselines are bit-deterministic") {
  std::mt19937_64 rng(10);
  MarketScenario s = random_scenario(rng, 5);
  EpisodeReport a1 = rb_agg_run(s), a2 = rb_agg_run(s);
  EpisodeReport p1 = rb_p2p_run(s), p2 = rb_p2p_run(s);
  CHECK(a1.monetary == a2.monetary);
  CHECK(a1.aggregator_monetary == a2.aggregator_monetary);
  CHECK(p1.monetary == p2.monetary);
  CHECK(p1.rewards == p2.rewards);
}

TEST_CASE("uniform pricing dominates aggregator-only pricing hour by hour") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    MarketScenario s = random_scenario(rng, 4);
    EpisodeReport agg = rb_agg_run(s);
    EpisodeReport p2p = rb_p2p_run(s);
    for (int h = 0; h < s.hours; ++h) {
      for (const auto& p : s.prosumers) {
        double q = p.hourly_quantity[h];
        double m_agg = agg.hours[h].monetary.at(p.id);
        double m_p2p = p2p.hours[h].monetary.at(p.id);
        if (q < 0) CHECK(m_p2p >= m_agg - 1e-9);  // buyer cost no worse
        if (q > 0) CHECK(m_p2p >= m_agg - 1e-9);  // seller revenue no worse
      }
    }
  }
}

}  // TEST_SUITE
