#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

namespace lemsim {

enum class Act { kIdentity, kRelu, kTanh };

// Plain dense feedforward net. Batches are column-major: one sample per
// column, so a forward pass is a chain of matrix products.
struct DenseNet {
  std::vector<Eigen::MatrixXd> weights;  // layer l: (out_l x in_l)
  std::vector<Eigen::VectorXd> biases;
  Act hidden_act = Act::kRelu;
  Act output_act = Act::kIdentity;

  int layer_count() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int output_dim() const { return static_cast<int>(weights.back().rows()); }
  long parameter_count() const;
  bool all_finite() const;
};

// widths = {in, hidden..., out}. Uniform fan-in init; the final layer is
// scaled by final_layer_scale (actors use 0.1 to start near-neutral).
DenseNet make_dense_net(const std::vector<int>& widths, Act hidden, Act output,
                        std::mt19937_64& rng, double final_layer_scale = 1.0);

struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;   // z_l before activation
  std::vector<Eigen::MatrixXd> post;  // activation(z_l)
};

// Returns (out_dim x batch). Pass a cache to enable backward().
Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& x,
                        ForwardCache* cache = nullptr);

struct NetGrads {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};

// dy is dLoss/dOutput (out_dim x batch); gradients are summed over the
// batch, so divide dy by the batch size for mean-loss semantics. When dx is
// non-null it receives dLoss/dInput (needed for the policy gradient through
// a critic's action input). param_grads=false skips dW/db work when only dx
// is wanted.
NetGrads backward(const DenseNet& net, const ForwardCache& cache, const Eigen::MatrixXd& dy,
                  Eigen::MatrixXd* dx = nullptr, bool param_grads = true);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 0.0;  // applied to weight matrices only
  long step = 0;
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
};

AdamState make_adam(const DenseNet& net, double lr, double l2 = 0.0);
void adam_step(DenseNet& net, const NetGrads& grads, AdamState& state);

// Scalar-vector flavor for loose parameters (e.g. a policy's log-std head).
struct AdamVector {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  Eigen::VectorXd m, v;
};

AdamVector make_adam_vector(int dim, double lr);
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamVector& state);

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(DenseNet& target, const DenseNet& online, double tau);

}  // namespace lemsim
