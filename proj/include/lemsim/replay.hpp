#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

namespace lemsim {

// One environment step as stored for the followers: every agent's
// observation, action, reward, and next observation, plus the shared done
// flag. Observations already contain the aggregator-state features.
struct StepRecord {
  Eigen::MatrixXd obs;       // (obs_dim x n_agents)
  Eigen::VectorXd actions;   // (n_agents)
  Eigen::VectorXd rewards;   // (n_agents)
  Eigen::MatrixXd next_obs;  // (obs_dim x n_agents)
  double done = 0;
};

struct TransitionBatch {
  Eigen::MatrixXd obs;       // (n_agents*obs_dim x B), agent blocks stacked
  Eigen::MatrixXd next_obs;  // (n_agents*obs_dim x B)
  Eigen::MatrixXd actions;   // (n_agents x B)
  Eigen::MatrixXd rewards;   // (n_agents x B)
  Eigen::VectorXd done;      // (B)
};

// Fixed-capacity FIFO ring with uniform without-replacement sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(long capacity, int n_agents, int obs_dim);

  void push(const StepRecord& r);
  long size() const { return size_; }
  long capacity() const { return capacity_; }
  int n_agents() const { return n_agents_; }
  int obs_dim() const { return obs_dim_; }

  // Floyd's sampling: k distinct storage slots, uniform over the current
  // contents.
  std::vector<long> sample_indices(int k, std::mt19937_64& rng) const;
  TransitionBatch gather(const std::vector<long>& indices) const;

 private:
  long capacity_;
  int n_agents_;
  int obs_dim_;
  long size_ = 0;
  long pos_ = 0;  // next slot to overwrite
  Eigen::MatrixXd obs_, next_obs_;  // (n_agents*obs_dim x capacity)
  Eigen::MatrixXd actions_, rewards_;  // (n_agents x capacity)
  Eigen::VectorXd done_;
};

}  // namespace lemsim
