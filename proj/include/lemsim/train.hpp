#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lemsim/config.hpp"
#include "lemsim/marl.hpp"
#include "lemsim/scenario.hpp"

namespace lemsim {

struct TrainConfig {
  long total_timesteps = 60000;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double noise_rate = 0.1;  // exploration sigma, normalized action units
  double gamma = 0.95;
  double tau = 0.01;
  long buffer_capacity = 500000;
  int batch_size = 256;
  int update_every = 1;  // follower update cadence in environment steps
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  int k_epochs = 10;
  int ppo_minibatch = 256;
  double l2_reg = 1e-3;  // leader networks only
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double init_std = 0.5;
  int t_horizon = 240;  // leader update horizon (10 episodes)
  std::vector<int> hidden = {64, 64};
  CriticMode critic_mode = CriticMode::kLsd;
  int workers = 0;  // parallel follower updates; 0 = hardware concurrency
  EnvConfig env;

  static TrainConfig from_config(const KeyValueConfig& cfg);
};

struct TrainingLog {
  struct Row {
    long episode = 0;
    double r_ag = 0;                // raw $, summed over the episode
    std::vector<double> r_n;        // raw $ per follower
    double critic_loss = 0;         // means over the episode's updates
    double actor_value = 0;
    double ppo_policy_loss = 0;
    double ppo_value_loss = 0;
  };
  std::vector<std::pair<std::string, std::string>> header;  // run description
  std::vector<Row> rows;
  double env_step_seconds = 0;  // environment mechanics only
  long env_steps = 0;
  double update_seconds = 0;
  long action_clamps = 0;

  double mean_env_step_ms() const {
    return env_steps == 0 ? 0.0 : 1e3 * env_step_seconds / env_steps;
  }
};

void write_training_log(const std::string& path, const TrainingLog& log);

struct TrainResult {
  PolicySet policies;
  TrainingLog log;
};

// Runs the full leader-follower loop on the scenario: followers act, the
// P2P hour clears, the leader observes the updated aggregator state, acts,
// and the hour settles. Follower updates run every `update_every` steps
// once the buffer holds a batch; the leader updates every t_horizon steps.
// Deterministic for a fixed seed, independent of the worker count.
TrainResult train(const MarketScenario& scenario, const TrainConfig& config, uint64_t seed,
                  const std::function<void(long episode, const PolicySet&)>& on_episode = {});

}  // namespace lemsim
