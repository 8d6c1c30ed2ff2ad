#include "lemsim/replay.hpp"

#include <unordered_set>

#include "lemsim/common.hpp"

namespace lemsim {

ReplayBuffer::ReplayBuffer(long capacity, int n_agents, int obs_dim)
    : capacity_(capacity), n_agents_(n_agents), obs_dim_(obs_dim) {
  if (capacity <= 0) throw DataError("replay capacity must be positive");
  obs_ = Eigen::MatrixXd::Zero(static_cast<long>(n_agents) * obs_dim, capacity);
  next_obs_ = Eigen::MatrixXd::Zero(static_cast<long>(n_agents) * obs_dim, capacity);
  actions_ = Eigen::MatrixXd::Zero(n_agents, capacity);
  rewards_ = Eigen::MatrixXd::Zero(n_agents, capacity);
  done_ = Eigen::VectorXd::Zero(capacity);
}

void ReplayBuffer::push(const StepRecord& r) {
  for (int a = 0; a < n_agents_; ++a) {
    obs_.block(static_cast<long>(a) * obs_dim_, pos_, obs_dim_, 1) = r.obs.col(a);
    next_obs_.block(static_cast<long>(a) * obs_dim_, pos_, obs_dim_, 1) = r.next_obs.col(a);
  }
  actions_.col(pos_) = r.actions;
  rewards_.col(pos_) = r.rewards;
  done_(pos_) = r.done;
  pos_ = (pos_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

std::vector<long> ReplayBuffer::sample_indices(int k, std::mt19937_64& rng) const {
  if (k > size_) throw DataError("cannot sample more transitions than stored");
  std::unordered_set<long> chosen;
  std::vector<long> out;
  out.reserve(k);
  for (long j = size_ - k; j < size_; ++j) {
    std::uniform_int_distribution<long> dist(0, j);
    long t = dist(rng);
    if (chosen.count(t)) t = j;
    chosen.insert(t);
    out.push_back(t);
  }
  return out;
}

TransitionBatch ReplayBuffer::gather(const std::vector<long>& indices) const {
  const long b = static_cast<long>(indices.size());
  TransitionBatch batch;
  batch.obs.resize(obs_.rows(), b);
  batch.next_obs.resize(obs_.rows(), b);
  batch.actions.resize(n_agents_, b);
  batch.rewards.resize(n_agents_, b);
  batch.done.resize(b);
  for (long i = 0; i < b; ++i) {
    long s = indices[i];
    batch.obs.col(i) = obs_.col(s);
    batch.next_obs.col(i) = next_obs_.col(s);
    batch.actions.col(i) = actions_.col(s);
    batch.rewards.col(i) = rewards_.col(s);
    batch.done(i) = done_(s);
  }
  return batch;
}

}  // namespace lemsim
