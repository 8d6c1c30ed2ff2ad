#include "lemsim/marl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lemsim/common.hpp"

namespace lemsim {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)
}

int critic_input_dim(CriticMode mode, int n_agents, int obs_dim) {
  return mode == CriticMode::kLsd ? obs_dim + 1 : n_agents * (obs_dim + 1);
}

Eigen::MatrixXd assemble_critic_input(int agent_idx, const Eigen::MatrixXd& obs,
                                      const Eigen::MatrixXd& actions, CriticMode mode,
                                      int obs_dim) {
  const long b = obs.cols();
  const int n_agents = static_cast<int>(actions.rows());
  Eigen::MatrixXd in(critic_input_dim(mode, n_agents, obs_dim), b);
  in.topRows(obs_dim) = obs.middleRows(static_cast<long>(agent_idx) * obs_dim, obs_dim);
  in.row(obs_dim) = actions.row(agent_idx);
  if (mode == CriticMode::kCentralized) {
    long row = obs_dim + 1;
    for (int m = 0; m < n_agents; ++m) {
      if (m == agent_idx) continue;
      in.middleRows(row, obs_dim) = obs.middleRows(static_cast<long>(m) * obs_dim, obs_dim);
      in.row(row + obs_dim) = actions.row(m);
      row += obs_dim + 1;
    }
  }
  return in;
}

double follower_act(const DenseNet& actor, const Eigen::VectorXd& obs, double noise_scale,
                    std::mt19937_64& rng) {
  double a = forward(actor, obs)(0, 0);
  if (noise_scale > 0) {
    std::normal_distribution<double> noise(0.0, noise_scale);
    a += noise(rng);
  }
  return std::clamp(a, -1.0, 1.0);
}

Eigen::VectorXd critic_targets(const Follower& f, int agent_idx, const TransitionBatch& batch,
                               const Eigen::MatrixXd& next_actions_all, double gamma,
                               CriticMode mode, int obs_dim) {
  Eigen::MatrixXd next_in =
      assemble_critic_input(agent_idx, batch.next_obs, next_actions_all, mode, obs_dim);
  Eigen::MatrixXd q_next = forward(f.target_critic, next_in);
  Eigen::VectorXd y = batch.rewards.row(agent_idx).transpose() +
                      gamma * (1.0 - batch.done.array()).matrix().cwiseProduct(
                                  q_next.transpose().col(0));
  return y;
}

FollowerLosses follower_update(Follower& f, int agent_idx, const TransitionBatch& batch,
                               const Eigen::MatrixXd& next_actions_all, double gamma,
                               double tau, CriticMode mode, int obs_dim) {
  const long b = batch.obs.cols();
  FollowerLosses losses;

  // Critic regression toward the Bellman targets.
  Eigen::VectorXd y = critic_targets(f, agent_idx, batch, next_actions_all, gamma, mode, obs_dim);
  Eigen::MatrixXd in = assemble_critic_input(agent_idx, batch.obs, batch.actions, mode, obs_dim);
  ForwardCache critic_cache;
  Eigen::MatrixXd q = forward(f.critic, in, &critic_cache);
  Eigen::MatrixXd err = q.row(0).transpose() - y;  // (b x 1)
  losses.critic_loss = err.squaredNorm() / static_cast<double>(b);
  Eigen::MatrixXd dq = (2.0 / static_cast<double>(b)) * err.transpose();
  NetGrads critic_grads = backward(f.critic, critic_cache, dq);
  adam_step(f.critic, critic_grads, f.critic_opt);

  // Deterministic policy gradient: ascend the critic through its action
  // input, with other agents' actions (if any) taken from the batch.
  Eigen::MatrixXd own_obs = batch.obs.middleRows(static_cast<long>(agent_idx) * obs_dim, obs_dim);
  ForwardCache actor_cache;
  Eigen::MatrixXd a_now = forward(f.actor, own_obs, &actor_cache);
  Eigen::MatrixXd actions_now = batch.actions;
  actions_now.row(agent_idx) = a_now.row(0);
  Eigen::MatrixXd pi_in = assemble_critic_input(agent_idx, batch.obs, actions_now, mode, obs_dim);
  ForwardCache q_cache;
  Eigen::MatrixXd q_pi = forward(f.critic, pi_in, &q_cache);
  losses.actor_value = q_pi.row(0).mean();
  Eigen::MatrixXd dq_pi =
      Eigen::MatrixXd::Constant(1, b, -1.0 / static_cast<double>(b));  // minimize -mean(Q)
  Eigen::MatrixXd d_input;
  backward(f.critic, q_cache, dq_pi, &d_input, /*param_grads=*/false);
  Eigen::MatrixXd d_action = d_input.row(obs_dim);  // own action row
  NetGrads actor_grads = backward(f.actor, actor_cache, d_action);
  adam_step(f.actor, actor_grads, f.actor_opt);

  soft_update(f.target_actor, f.actor, tau);
  soft_update(f.target_critic, f.critic, tau);

  if (!f.actor.all_finite() || !f.critic.all_finite())
    throw NumericalError("follower update produced non-finite parameters");
  return losses;
}

LeaderSample leader_act(const LeaderPolicy& leader, const Eigen::VectorXd& obs,
                        std::mt19937_64& rng, bool stochastic) {
  LeaderSample s;
  Eigen::VectorXd mu = forward(leader.mean, obs).col(0);
  Eigen::VectorXd sigma = leader.log_std.array().exp();
  s.raw_action = mu;
  if (stochastic) {
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < mu.size(); ++i) s.raw_action(i) += sigma(i) * unit(rng);
  }
  s.log_prob = 0;
  for (int i = 0; i < mu.size(); ++i) {
    double z = (s.raw_action(i) - mu(i)) / sigma(i);
    s.log_prob += -0.5 * z * z - leader.log_std(i) - kHalfLog2Pi;
  }
  s.value = forward(leader.value, obs)(0, 0);
  s.action.a_w = std::clamp(s.raw_action(0), 0.0, 1.0);
  s.action.a_b = std::clamp(s.raw_action(1), 0.0, 1.0);
  s.action.a_o = std::clamp(s.raw_action(2), 0.0, 1.0);
  return s;
}

RolloutBuffer::RolloutBuffer(int cap, int obs_dim, int action_dim) : capacity(cap) {
  obs = Eigen::MatrixXd::Zero(obs_dim, cap);
  actions = Eigen::MatrixXd::Zero(action_dim, cap);
  log_probs = Eigen::VectorXd::Zero(cap);
  rewards = Eigen::VectorXd::Zero(cap);
  values = Eigen::VectorXd::Zero(cap);
  done = Eigen::VectorXd::Zero(cap);
}

void RolloutBuffer::push(const Eigen::VectorXd& o, const Eigen::VectorXd& raw_action,
                         double log_prob, double reward, double value, double d) {
  if (size >= capacity) throw NumericalError("rollout buffer overflow");
  obs.col(size) = o;
  actions.col(size) = raw_action;
  log_probs(size) = log_prob;
  rewards(size) = reward;
  values(size) = value;
  done(size) = d;
  ++size;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_gae(const RolloutBuffer& rollout,
                                                        double gamma, double lambda,
                                                        double bootstrap_value) {
  const int t_len = rollout.size;
  Eigen::VectorXd adv(t_len), targets(t_len);
  double gae = 0;
  for (int t = t_len - 1; t >= 0; --t) {
    double nonterminal = 1.0 - rollout.done(t);
    double next_value = (t == t_len - 1) ? bootstrap_value : rollout.values(t + 1);
    double delta =
        rollout.rewards(t) + gamma * next_value * nonterminal - rollout.values(t);
    gae = delta + gamma * lambda * nonterminal * gae;
    adv(t) = gae;
  }
  targets = adv + rollout.values.head(t_len);
  return {adv, targets};
}

PPOStats leader_update(LeaderPolicy& leader, const RolloutBuffer& rollout,
                       const Eigen::VectorXd& advantages, const Eigen::VectorXd& targets,
                       const PPOConfig& cfg, std::mt19937_64& rng) {
  const int t_len = rollout.size;
  const int action_dim = static_cast<int>(rollout.actions.rows());
  PPOStats stats;

  // Normalized advantages; all-zero advantages normalize to zero, keeping
  // the surrogate gradient silent.
  Eigen::VectorXd norm_adv = advantages.head(t_len);
  if (cfg.normalize_advantages) {
    double mean = norm_adv.mean();
    double var = (norm_adv.array() - mean).square().sum() / t_len;
    norm_adv = (norm_adv.array() - mean) / (std::sqrt(var) + 1e-8);
  }

  std::vector<int> order(t_len);
  std::iota(order.begin(), order.end(), 0);

  long clipped = 0, seen = 0;
  bool first_batch = true;
  for (int epoch = 0; epoch < cfg.k_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < t_len; start += cfg.minibatch) {
      const int b = std::min(cfg.minibatch, t_len - start);
      Eigen::MatrixXd obs(rollout.obs.rows(), b);
      Eigen::MatrixXd act(action_dim, b);
      Eigen::VectorXd old_logp(b), adv(b), tgt(b);
      for (int i = 0; i < b; ++i) {
        int j = order[start + i];
        obs.col(i) = rollout.obs.col(j);
        act.col(i) = rollout.actions.col(j);
        old_logp(i) = rollout.log_probs(j);
        adv(i) = norm_adv(j);
        tgt(i) = targets(j);
      }

      ForwardCache mean_cache;
      Eigen::MatrixXd mu = forward(leader.mean, obs, &mean_cache);
      Eigen::VectorXd sigma = leader.log_std.array().exp();

      Eigen::VectorXd new_logp = Eigen::VectorXd::Zero(b);
      for (int i = 0; i < b; ++i)
        for (int d = 0; d < action_dim; ++d) {
          double z = (act(d, i) - mu(d, i)) / sigma(d);
          new_logp(i) += -0.5 * z * z - leader.log_std(d) - kHalfLog2Pi;
        }

      Eigen::VectorXd ratio = (new_logp - old_logp).array().exp();
      if (first_batch) {
        stats.first_batch_max_ratio_dev = (ratio.array() - 1.0).abs().maxCoeff();
        first_batch = false;
      }

      // d(-L_clip)/d(new_logp): zero where the clipped branch is active.
      Eigen::VectorXd dlogp(b);
      double policy_loss = 0;
      for (int i = 0; i < b; ++i) {
        double unclipped = ratio(i) * adv(i);
        double cl = std::clamp(ratio(i), 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        double clipped_term = cl * adv(i);
        policy_loss -= std::min(unclipped, clipped_term);
        bool active = unclipped <= clipped_term;  // unclipped branch selected
        dlogp(i) = active ? -ratio(i) * adv(i) / b : 0.0;
        if (!active) ++clipped;
        ++seen;
      }
      policy_loss /= b;
      stats.policy_loss = policy_loss;

      // Backprop through the Gaussian log-density.
      Eigen::MatrixXd dmu(action_dim, b);
      Eigen::VectorXd dlog_std = Eigen::VectorXd::Zero(action_dim);
      for (int i = 0; i < b; ++i)
        for (int d = 0; d < action_dim; ++d) {
          double diff = act(d, i) - mu(d, i);
          double inv_var = 1.0 / (sigma(d) * sigma(d));
          dmu(d, i) = dlogp(i) * diff * inv_var;
          dlog_std(d) += dlogp(i) * (diff * diff * inv_var - 1.0);
        }
      // Entropy bonus: H = sum_d log_std_d + const, so the bonus gradient on
      // log_std is a constant.
      dlog_std.array() -= cfg.entropy_coef;

      NetGrads mean_grads = backward(leader.mean, mean_cache, dmu);
      adam_step(leader.mean, mean_grads, leader.mean_opt);
      adam_step(leader.log_std, dlog_std, leader.log_std_opt);
      leader.log_std = leader.log_std.cwiseMax(cfg.log_std_min).cwiseMin(cfg.log_std_max);

      ForwardCache value_cache;
      Eigen::MatrixXd v = forward(leader.value, obs, &value_cache);
      Eigen::VectorXd verr = v.row(0).transpose() - tgt;
      stats.value_loss = cfg.value_coef * verr.squaredNorm() / b;
      Eigen::MatrixXd dv = (2.0 * cfg.value_coef / b) * verr.transpose();
      NetGrads value_grads = backward(leader.value, value_cache, dv);
      adam_step(leader.value, value_grads, leader.value_opt);
    }
  }
  stats.clip_fraction = seen > 0 ? static_cast<double>(clipped) / seen : 0.0;
  if (!leader.mean.all_finite() || !leader.value.all_finite() || !leader.log_std.allFinite())
    throw NumericalError("leader update produced non-finite parameters");
  return stats;
}

PolicySet make_policy_set(int n_followers, int obs_dim, int leader_obs_dim,
                          const std::vector<int>& hidden, CriticMode mode, double actor_lr,
                          double critic_lr, double leader_l2, double init_std,
                          std::mt19937_64& rng) {
  PolicySet p;
  p.critic_mode = mode;
  p.obs_dim = obs_dim;
  p.leader_obs_dim = leader_obs_dim;
  p.hidden = hidden;

  auto widths = [&hidden](int in, int out) {
    std::vector<int> w;
    w.push_back(in);
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
  };

  const int critic_in = critic_input_dim(mode, n_followers, obs_dim);
  for (int n = 0; n < n_followers; ++n) {
    Follower f;
    f.actor = make_dense_net(widths(obs_dim, 1), Act::kRelu, Act::kTanh, rng, 0.1);
    f.critic = make_dense_net(widths(critic_in, 1), Act::kRelu, Act::kIdentity, rng);
    f.target_actor = f.actor;
    f.target_critic = f.critic;
    f.actor_opt = make_adam(f.actor, actor_lr);
    f.critic_opt = make_adam(f.critic, critic_lr);
    p.followers.push_back(std::move(f));
  }

  p.leader.mean = make_dense_net(widths(leader_obs_dim, 3), Act::kRelu, Act::kIdentity, rng, 0.1);
  p.leader.mean.biases.back().array() += 0.5;  // start quoting mid-range
  p.leader.value = make_dense_net(widths(leader_obs_dim, 1), Act::kRelu, Act::kIdentity, rng);
  p.leader.log_std = Eigen::VectorXd::Constant(3, std::log(init_std));
  p.leader.mean_opt = make_adam(p.leader.mean, actor_lr, leader_l2);
  p.leader.value_opt = make_adam(p.leader.value, critic_lr, leader_l2);
  p.leader.log_std_opt = make_adam_vector(3, actor_lr);
  return p;
}

}  // namespace lemsim
