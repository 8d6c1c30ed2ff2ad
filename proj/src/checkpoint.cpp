#include "lemsim/checkpoint.hpp"

#include <cstdint>
#include <fstream>

#include "lemsim/common.hpp"

namespace lemsim {

namespace {

constexpr char kMagic[8] = {'L', 'E', 'M', 'C', 'K', 'P', 'T', '1'};

void put_i64(std::ostream& out, int64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }

int64_t get_i64(std::istream& in) {
  int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) throw DataError("checkpoint truncated");
  return v;
}

double get_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) throw DataError("checkpoint truncated");
  return v;
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  put_i64(out, m.rows());
  put_i64(out, m.cols());
  for (long c = 0; c < m.cols(); ++c)
    for (long r = 0; r < m.rows(); ++r) put_f64(out, m(r, c));
}

Eigen::MatrixXd get_matrix(std::istream& in) {
  long rows = get_i64(in), cols = get_i64(in);
  if (rows < 0 || cols < 0 || rows * cols > (1L << 30))
    throw DataError("checkpoint shape header is implausible");
  Eigen::MatrixXd m(rows, cols);
  for (long c = 0; c < cols; ++c)
    for (long r = 0; r < rows; ++r) m(r, c) = get_f64(in);
  return m;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  put_matrix(out, v);
}

Eigen::VectorXd get_vector(std::istream& in) {
  Eigen::MatrixXd m = get_matrix(in);
  if (m.cols() != 1) throw DataError("checkpoint vector has multiple columns");
  return m.col(0);
}

void put_net(std::ostream& out, const DenseNet& net) {
  put_i64(out, net.layer_count());
  put_i64(out, static_cast<int64_t>(net.hidden_act));
  put_i64(out, static_cast<int64_t>(net.output_act));
  for (int l = 0; l < net.layer_count(); ++l) {
    put_matrix(out, net.weights[l]);
    put_vector(out, net.biases[l]);
  }
}

DenseNet get_net(std::istream& in) {
  DenseNet net;
  long layers = get_i64(in);
  net.hidden_act = static_cast<Act>(get_i64(in));
  net.output_act = static_cast<Act>(get_i64(in));
  for (long l = 0; l < layers; ++l) {
    net.weights.push_back(get_matrix(in));
    net.biases.push_back(get_vector(in));
  }
  return net;
}

void put_adam(std::ostream& out, const AdamState& s) {
  put_f64(out, s.lr);
  put_f64(out, s.beta1);
  put_f64(out, s.beta2);
  put_f64(out, s.eps);
  put_f64(out, s.l2);
  put_i64(out, s.step);
  put_i64(out, static_cast<int64_t>(s.mw.size()));
  for (size_t l = 0; l < s.mw.size(); ++l) {
    put_matrix(out, s.mw[l]);
    put_matrix(out, s.vw[l]);
    put_vector(out, s.mb[l]);
    put_vector(out, s.vb[l]);
  }
}

AdamState get_adam(std::istream& in) {
  AdamState s;
  s.lr = get_f64(in);
  s.beta1 = get_f64(in);
  s.beta2 = get_f64(in);
  s.eps = get_f64(in);
  s.l2 = get_f64(in);
  s.step = get_i64(in);
  long layers = get_i64(in);
  for (long l = 0; l < layers; ++l) {
    s.mw.push_back(get_matrix(in));
    s.vw.push_back(get_matrix(in));
    s.mb.push_back(get_vector(in));
    s.vb.push_back(get_vector(in));
  }
  return s;
}

}  // namespace

void save_policy_set(const std::string& path, const PolicySet& policies) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  put_i64(out, static_cast<int64_t>(policies.critic_mode));
  put_i64(out, static_cast<int64_t>(policies.followers.size()));
  put_i64(out, policies.obs_dim);
  put_i64(out, policies.leader_obs_dim);
  put_i64(out, static_cast<int64_t>(policies.hidden.size()));
  for (int h : policies.hidden) put_i64(out, h);
  for (const Follower& f : policies.followers) {
    put_net(out, f.actor);
    put_net(out, f.critic);
    put_net(out, f.target_actor);
    put_net(out, f.target_critic);
    put_adam(out, f.actor_opt);
    put_adam(out, f.critic_opt);
  }
  put_net(out, policies.leader.mean);
  put_vector(out, policies.leader.log_std);
  put_net(out, policies.leader.value);
  put_adam(out, policies.leader.mean_opt);
  put_adam(out, policies.leader.value_opt);
  put_f64(out, policies.leader.log_std_opt.lr);
  put_i64(out, policies.leader.log_std_opt.step);
  put_vector(out, policies.leader.log_std_opt.m);
  put_vector(out, policies.leader.log_std_opt.v);
  if (!out) throw DataError("failed while writing '" + path + "'");
}

PolicySet load_policy_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != std::string(kMagic, 8))
    throw DataError("'" + path + "' is not a policy checkpoint");
  PolicySet p;
  p.critic_mode = static_cast<CriticMode>(get_i64(in));
  long n = get_i64(in);
  p.obs_dim = static_cast<int>(get_i64(in));
  p.leader_obs_dim = static_cast<int>(get_i64(in));
  long hidden_n = get_i64(in);
  for (long i = 0; i < hidden_n; ++i) p.hidden.push_back(static_cast<int>(get_i64(in)));
  for (long i = 0; i < n; ++i) {
    Follower f;
    f.actor = get_net(in);
    f.critic = get_net(in);
    f.target_actor = get_net(in);
    f.target_critic = get_net(in);
    f.actor_opt = get_adam(in);
    f.critic_opt = get_adam(in);
    p.followers.push_back(std::move(f));
  }
  p.leader.mean = get_net(in);
  p.leader.log_std = get_vector(in);
  p.leader.value = get_net(in);
  p.leader.mean_opt = get_adam(in);
  p.leader.value_opt = get_adam(in);
  p.leader.log_std_opt.lr = get_f64(in);
  p.leader.log_std_opt.step = get_i64(in);
  p.leader.log_std_opt.m = get_vector(in);
  p.leader.log_std_opt.v = get_vector(in);
  return p;
}

}  // namespace lemsim
