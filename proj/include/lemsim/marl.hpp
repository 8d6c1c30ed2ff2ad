#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "lemsim/env.hpp"
#include "lemsim/neural.hpp"
#include "lemsim/replay.hpp"

namespace lemsim {

enum class CriticMode {
  kLsd,          // critic sees own state, own action, aggregator state only
  kCentralized,  // critic additionally sees every agent's observation/action
};

// Critic input layout: [own obs; own action] for kLsd, followed by
// [other obs; other action] blocks in ascending agent order for
// kCentralized. Own observation already carries the aggregator features.
int critic_input_dim(CriticMode mode, int n_agents, int obs_dim);

Eigen::MatrixXd assemble_critic_input(int agent_idx, const Eigen::MatrixXd& obs,
                                      const Eigen::MatrixXd& actions, CriticMode mode,
                                      int obs_dim);

// One decentralized actor-critic follower with target copies.
struct Follower {
  DenseNet actor, critic;
  DenseNet target_actor, target_critic;
  AdamState actor_opt, critic_opt;
};

// Gaussian leader policy: affine mean head with a trainable state-free
// log-std, plus a separate value net.
struct LeaderPolicy {
  DenseNet mean;
  Eigen::VectorXd log_std;
  DenseNet value;
  AdamState mean_opt, value_opt;
  AdamVector log_std_opt;
};

struct PolicySet {
  std::vector<Follower> followers;
  LeaderPolicy leader;
  CriticMode critic_mode = CriticMode::kLsd;
  int obs_dim = 0;
  int leader_obs_dim = 0;
  std::vector<int> hidden;
};

// Deterministic actor output plus clamped Gaussian exploration noise
// (sigma = noise_scale, in normalized action units).
double follower_act(const DenseNet& actor, const Eigen::VectorXd& obs, double noise_scale,
                    std::mt19937_64& rng);

// Bellman targets y = r + gamma * (1 - done) * Q'(s', mu'(s'), s_ag') using
// the follower's target networks. next_actions_all holds every agent's
// target-actor action on its next observation (n_agents x B).
Eigen::VectorXd critic_targets(const Follower& f, int agent_idx, const TransitionBatch& batch,
                               const Eigen::MatrixXd& next_actions_all, double gamma,
                               CriticMode mode, int obs_dim);

struct FollowerLosses {
  double critic_loss = 0;   // mean squared target error before the step
  double actor_value = 0;   // mean critic value of the actor's actions
};

// One critic descent step, one deterministic-policy-gradient actor step,
// then soft target updates.
FollowerLosses follower_update(Follower& f, int agent_idx, const TransitionBatch& batch,
                               const Eigen::MatrixXd& next_actions_all, double gamma,
                               double tau, CriticMode mode, int obs_dim);

struct LeaderSample {
  AggregatorAction action;      // clamped to [0,1]^3 for the environment
  Eigen::VectorXd raw_action;   // pre-clamp Gaussian sample (log-prob basis)
  double log_prob = 0;
  double value = 0;
};

LeaderSample leader_act(const LeaderPolicy& leader, const Eigen::VectorXd& obs,
                        std::mt19937_64& rng, bool stochastic);

// Leader trajectory storage for one update horizon.
struct RolloutBuffer {
  explicit RolloutBuffer(int capacity, int obs_dim, int action_dim);
  void push(const Eigen::VectorXd& obs, const Eigen::VectorXd& raw_action, double log_prob,
            double reward, double value, double done);
  void clear() { size = 0; }
  bool full() const { return size >= capacity; }

  int capacity = 0;
  int size = 0;
  Eigen::MatrixXd obs;      // (obs_dim x capacity)
  Eigen::MatrixXd actions;  // (action_dim x capacity)
  Eigen::VectorXd log_probs, rewards, values, done;
};

// Generalized advantage estimation with terminal bootstrap zero at done and
// bootstrap_value at the horizon cut. Targets are advantages + values.
std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_gae(const RolloutBuffer& rollout,
                                                        double gamma, double lambda,
                                                        double bootstrap_value);

struct PPOConfig {
  double clip_eps = 0.2;
  int k_epochs = 10;
  int minibatch = 256;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double log_std_min = -4.0;
  double log_std_max = 1.0;
  bool normalize_advantages = true;
};

struct PPOStats {
  double first_batch_max_ratio_dev = 0;  // max |ratio - 1| on the first pass
  double clip_fraction = 0;
  double policy_loss = 0;
  double value_loss = 0;
};

// K epochs of clipped-surrogate ascent plus value regression and entropy
// bonus; ratios are taken against the rollout's frozen log-probs.
PPOStats leader_update(LeaderPolicy& leader, const RolloutBuffer& rollout,
                       const Eigen::VectorXd& advantages, const Eigen::VectorXd& targets,
                       const PPOConfig& cfg, std::mt19937_64& rng);

PolicySet make_policy_set(int n_followers, int obs_dim, int leader_obs_dim,
                          const std::vector<int>& hidden, CriticMode mode, double actor_lr,
                          double critic_lr, double leader_l2, double init_std,
                          std::mt19937_64& rng);

}  // namespace lemsim
