#include "lemsim/train.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include "lemsim/common.hpp"
#include "lemsim/csv.hpp"

namespace lemsim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Target-actor actions for every agent on its next observation; shared by
// all follower updates of one event.
Eigen::MatrixXd target_next_actions(const PolicySet& policies, const TransitionBatch& batch,
                                    int obs_dim) {
  const int n = static_cast<int>(policies.followers.size());
  Eigen::MatrixXd acts(n, batch.next_obs.cols());
  for (int a = 0; a < n; ++a) {
    Eigen::MatrixXd own = batch.next_obs.middleRows(static_cast<long>(a) * obs_dim, obs_dim);
    acts.row(a) = forward(policies.followers[a].target_actor, own).row(0);
  }
  return acts;
}

}  // namespace

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg) {
  TrainConfig c;
  c.total_timesteps = cfg.get_long("total_timesteps", c.total_timesteps);
  c.actor_lr = cfg.get_double("actor_lr", c.actor_lr);
  c.critic_lr = cfg.get_double("critic_lr", c.critic_lr);
  c.noise_rate = cfg.get_double("noise_rate", c.noise_rate);
  c.gamma = cfg.get_double("gamma", c.gamma);
  c.tau = cfg.get_double("tau", c.tau);
  c.buffer_capacity = cfg.get_long("buffer_size", c.buffer_capacity);
  c.batch_size = cfg.get_int("batch_size", c.batch_size);
  c.update_every = cfg.get_int("update_every", c.update_every);
  c.gae_lambda = cfg.get_double("gae_lambda", c.gae_lambda);
  c.clip_eps = cfg.get_double("clip_eps", c.clip_eps);
  c.k_epochs = cfg.get_int("k_epochs", c.k_epochs);
  c.ppo_minibatch = cfg.get_int("ppo_minibatch", c.ppo_minibatch);
  c.l2_reg = cfg.get_double("l2_reg", c.l2_reg);
  c.value_coef = cfg.get_double("value_coef", c.value_coef);
  c.entropy_coef = cfg.get_double("entropy_coef", c.entropy_coef);
  c.init_std = cfg.get_double("init_std", c.init_std);
  c.t_horizon = cfg.get_int("t_horizon", c.t_horizon);
  c.workers = cfg.get_int("workers", c.workers);
  int h1 = cfg.get_int("hidden1", 64);
  int h2 = cfg.get_int("hidden2", 64);
  c.hidden = h2 > 0 ? std::vector<int>{h1, h2} : std::vector<int>{h1};
  std::string mode = cfg.get_string("critic_mode", "lsd");
  if (mode == "lsd")
    c.critic_mode = CriticMode::kLsd;
  else if (mode == "centralized")
    c.critic_mode = CriticMode::kCentralized;
  else
    throw DataError("critic_mode must be 'lsd' or 'centralized'");
  c.env.initial_delta_b = cfg.get_double("initial_delta_b", c.env.initial_delta_b);
  c.env.initial_delta_o = cfg.get_double("initial_delta_o", c.env.initial_delta_o);
  c.env.quantity_scale = cfg.get_double("quantity_scale", c.env.quantity_scale);
  c.env.cash_scale = cfg.get_double("cash_scale", c.env.cash_scale);
  std::string penalty_mode = cfg.get_string("penalty_sign_mode", "compensation");
  if (penalty_mode == "compensation")
    c.env.penalty_sign_mode = PenaltySignMode::kCompensation;
  else if (penalty_mode == "literal")
    c.env.penalty_sign_mode = PenaltySignMode::kLiteral;
  else
    throw DataError("penalty_sign_mode must be 'compensation' or 'literal'");
  std::string reward_mode = cfg.get_string("buyer_reward_mode", "savings");
  if (reward_mode == "savings")
    c.env.buyer_reward_mode = BuyerRewardMode::kSavings;
  else if (reward_mode == "literal")
    c.env.buyer_reward_mode = BuyerRewardMode::kLiteral;
  else
    throw DataError("buyer_reward_mode must be 'savings' or 'literal'");
  return c;
}

void write_training_log(const std::string& path, const TrainingLog& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& [key, value] : log.header) out << "# " << key << ": " << value << "\n";
  out << "episode,r_ag";
  size_t n = log.rows.empty() ? 0 : log.rows.front().r_n.size();
  for (size_t i = 0; i < n; ++i) out << ",r_" << (i + 1);
  out << ",critic_loss,actor_value,ppo_policy_loss,ppo_value_loss\n";
  for (const auto& row : log.rows) {
    out << row.episode << "," << format_exact(row.r_ag);
    for (double r : row.r_n) out << "," << format_exact(r);
    out << "," << format_exact(row.critic_loss) << "," << format_exact(row.actor_value) << ","
        << format_exact(row.ppo_policy_loss) << "," << format_exact(row.ppo_value_loss) << "\n";
  }
}

TrainResult train(const MarketScenario& scenario, const TrainConfig& config, uint64_t seed,
                  const std::function<void(long episode, const PolicySet&)>& on_episode) {
  EnvConfig env_cfg = config.env;
  env_cfg.training = true;

  std::mt19937_64 master(seed);
  const uint64_t env_seed = master();
  const uint64_t init_seed = master();
  const uint64_t noise_seed = master();
  const uint64_t leader_seed = master();
  const uint64_t buffer_seed = master();
  const uint64_t ppo_seed = master();

  MarketEnv env(scenario, env_cfg, env_seed);
  const int n_agents = env.n_prosumers();
  const int obs_dim = MarketEnv::kFollowerObsDim;
  const double cash_scale = env.scales().cash_scale;

  std::mt19937_64 init_rng(init_seed);
  TrainResult result;
  result.policies = make_policy_set(n_agents, obs_dim, MarketEnv::kLeaderObsDim, config.hidden,
                                    config.critic_mode, config.actor_lr, config.critic_lr,
                                    config.l2_reg, config.init_std, init_rng);
  PolicySet& policies = result.policies;

  // The buffer never holds more transitions than the run produces.
  ReplayBuffer buffer(std::min(config.buffer_capacity, config.total_timesteps + 1), n_agents,
                      obs_dim);
  RolloutBuffer rollout(config.t_horizon, MarketEnv::kLeaderObsDim, 3);
  PPOConfig ppo;
  ppo.clip_eps = config.clip_eps;
  ppo.k_epochs = config.k_epochs;
  ppo.minibatch = config.ppo_minibatch;
  ppo.value_coef = config.value_coef;
  ppo.entropy_coef = config.entropy_coef;

  std::mt19937_64 noise_rng(noise_seed);
  std::mt19937_64 leader_rng(leader_seed);
  std::mt19937_64 buffer_rng(buffer_seed);
  std::mt19937_64 ppo_rng(ppo_seed);

  int workers = config.workers > 0
                    ? config.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n_agents));

  TrainingLog& log = result.log;
  log.header.emplace_back("critic_mode",
                          config.critic_mode == CriticMode::kLsd ? "lsd" : "centralized");
  log.header.emplace_back("critic_input_dim",
                          std::to_string(critic_input_dim(config.critic_mode, n_agents, obs_dim)));
  log.header.emplace_back("actor_input_dim", std::to_string(obs_dim));
  log.header.emplace_back("n_followers", std::to_string(n_agents));
  log.header.emplace_back("seed", std::to_string(seed));
  log.header.emplace_back("total_timesteps", std::to_string(config.total_timesteps));

  TrainingLog::Row episode_row;
  episode_row.episode = 1;
  episode_row.r_n.assign(n_agents, 0.0);
  long episode = 1;
  long updates_in_episode = 0;
  PPOStats last_ppo;

  for (long step = 0; step < config.total_timesteps; ++step) {
    if (env.done()) {
      log.rows.push_back(episode_row);
      if (on_episode) on_episode(episode, policies);
      ++episode;
      episode_row = TrainingLog::Row{};
      episode_row.episode = episode;
      episode_row.r_n.assign(n_agents, 0.0);
      updates_in_episode = 0;
      env.reset();
    }

    StepRecord record;
    record.obs.resize(obs_dim, n_agents);
    record.actions.resize(n_agents);
    record.rewards.resize(n_agents);
    record.next_obs.resize(obs_dim, n_agents);

    std::vector<ProsumerAction> actions(n_agents);
    for (int a = 0; a < n_agents; ++a) {
      record.obs.col(a) = env.follower_observation(a);
      record.actions(a) =
          follower_act(policies.followers[a].actor, record.obs.col(a), config.noise_rate,
                       noise_rng);
      actions[a].a_p = record.actions(a);
    }

    auto env_t0 = Clock::now();
    env.step_followers(actions);
    Eigen::VectorXd leader_obs = env.leader_observation();
    log.env_step_seconds += seconds_since(env_t0);

    if (rollout.full()) {
      auto upd_t0 = Clock::now();
      double bootstrap = forward(policies.leader.value, leader_obs)(0, 0);
      auto [adv, targets] = compute_gae(rollout, config.gamma, config.gae_lambda, bootstrap);
      last_ppo = leader_update(policies.leader, rollout, adv, targets, ppo, ppo_rng);
      rollout.clear();
      log.update_seconds += seconds_since(upd_t0);
    }

    LeaderSample sample = leader_act(policies.leader, leader_obs, leader_rng, true);

    env_t0 = Clock::now();
    StepOutcome outcome = env.step_leader(sample.action);
    log.env_step_seconds += seconds_since(env_t0);
    ++log.env_steps;

    for (int a = 0; a < n_agents; ++a) {
      record.rewards(a) = outcome.follower_rewards[a] / cash_scale;
      record.next_obs.col(a) = env.follower_observation(a);
      episode_row.r_n[a] += outcome.follower_rewards[a];
    }
    record.done = outcome.done ? 1.0 : 0.0;
    episode_row.r_ag += outcome.aggregator_reward;
    buffer.push(record);
    rollout.push(leader_obs, sample.raw_action, sample.log_prob,
                 outcome.aggregator_reward / cash_scale, sample.value, record.done);
    episode_row.ppo_policy_loss = last_ppo.policy_loss;
    episode_row.ppo_value_loss = last_ppo.value_loss;

    if (buffer.size() >= config.batch_size && (step + 1) % config.update_every == 0) {
      auto upd_t0 = Clock::now();
      std::vector<long> idx = buffer.sample_indices(config.batch_size, buffer_rng);
      TransitionBatch batch = buffer.gather(idx);
      Eigen::MatrixXd next_actions = target_next_actions(policies, batch, obs_dim);

      std::vector<FollowerLosses> losses(n_agents);
      auto run_agent = [&](int a) {
        losses[a] = follower_update(policies.followers[a], a, batch, next_actions, config.gamma,
                                    config.tau, config.critic_mode, obs_dim);
      };
      if (workers <= 1) {
        for (int a = 0; a < n_agents; ++a) run_agent(a);
      } else {
        std::vector<std::thread> pool;
        std::atomic<int> cursor{0};
        for (int w = 0; w < workers; ++w)
          pool.emplace_back([&] {
            for (int a = cursor.fetch_add(1); a < n_agents; a = cursor.fetch_add(1)) run_agent(a);
          });
        for (auto& t : pool) t.join();
      }
      double critic_sum = 0, actor_sum = 0;
      for (const auto& l : losses) {
        critic_sum += l.critic_loss;
        actor_sum += l.actor_value;
      }
      ++updates_in_episode;
      double k = 1.0 / static_cast<double>(updates_in_episode);
      episode_row.critic_loss += (critic_sum / n_agents - episode_row.critic_loss) * k;
      episode_row.actor_value += (actor_sum / n_agents - episode_row.actor_value) * k;
      log.update_seconds += seconds_since(upd_t0);

      if (!std::isfinite(episode_row.critic_loss))
        throw NumericalError("non-finite critic loss at step " + std::to_string(step) +
                             ", episode " + std::to_string(episode));
    }
  }
  log.rows.push_back(episode_row);
  if (on_episode) on_episode(episode, policies);
  log.action_clamps = env.action_clamp_count();
  return result;
}

}  // namespace lemsim
