#pragma once

#include <cstdint>
#include <functional>

#include "lemsim/env.hpp"
#include "lemsim/marl.hpp"
#include "lemsim/report.hpp"

namespace lemsim {

struct EvalResult {
  EpisodeReport report;  // totals averaged over episodes; hour records from episode 0
  std::vector<double> per_episode_sum_p2p_reward;
  std::vector<double> per_episode_aggregator_reward;
};

// Noise-free rollouts of a trained policy set: actors act deterministically
// and the leader uses its mean action.
EvalResult evaluate_policies(const PolicySet& policies, const MarketScenario& scenario,
                             int episodes, const EnvConfig& config, int workers = 1);

// Uniform-random actions, one RNG stream per episode; useful as a
// no-learning reference distribution.
EvalResult evaluate_random(const MarketScenario& scenario, int episodes, uint64_t seed,
                           const EnvConfig& config, int workers = 1);

}  // namespace lemsim
