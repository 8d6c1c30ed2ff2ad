#include "lemsim/neural.hpp"

#include <cmath>

#include "lemsim/common.hpp"

namespace lemsim {

namespace {

Eigen::MatrixXd apply_act(Act act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Act::kIdentity: return z;
    case Act::kRelu: return z.cwiseMax(0.0);
    case Act::kTanh: return z.array().tanh().matrix();
  }
  return z;
}

// Derivative expressed from pre-activation z and post-activation a.
Eigen::MatrixXd act_grad(Act act, const Eigen::MatrixXd& z, const Eigen::MatrixXd& a) {
  switch (act) {
    case Act::kIdentity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    case Act::kRelu: return (z.array() > 0.0).cast<double>().matrix();
    case Act::kTanh: return (1.0 - a.array().square()).matrix();
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

}  // namespace

long DenseNet::parameter_count() const {
  long n = 0;
  for (int l = 0; l < layer_count(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

bool DenseNet::all_finite() const {
  for (int l = 0; l < layer_count(); ++l)
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  return true;
}

DenseNet make_dense_net(const std::vector<int>& widths, Act hidden, Act output,
                        std::mt19937_64& rng, double final_layer_scale) {
  if (widths.size() < 2) throw DataError("dense net needs at least input and output widths");
  DenseNet net;
  net.hidden_act = hidden;
  net.output_act = output;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    int in = widths[l], out = widths[l + 1];
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd w(out, in);
    Eigen::VectorXd b(out);
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < in; ++j) w(i, j) = u(rng);
      b(i) = u(rng);
    }
    if (l + 2 == widths.size()) {
      w *= final_layer_scale;
      b *= final_layer_scale;
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& x, ForwardCache* cache) {
  if (x.rows() != net.input_dim())
    throw NumericalError("forward: input has " + std::to_string(x.rows()) +
                         " rows, net expects " + std::to_string(net.input_dim()));
  const int last = net.layer_count() - 1;
  if (cache) {
    cache->input = x;
    cache->pre.assign(net.layer_count(), {});
    cache->post.assign(net.layer_count(), {});
  }
  Eigen::MatrixXd h = x;
  for (int l = 0; l <= last; ++l) {
    Eigen::MatrixXd z = (net.weights[l] * h).colwise() + net.biases[l];
    Act act = (l == last) ? net.output_act : net.hidden_act;
    Eigen::MatrixXd a = apply_act(act, z);
    if (cache) {
      cache->pre[l] = std::move(z);
      cache->post[l] = a;
    }
    h = std::move(a);
  }
  return h;
}

NetGrads backward(const DenseNet& net, const ForwardCache& cache, const Eigen::MatrixXd& dy,
                  Eigen::MatrixXd* dx, bool param_grads) {
  const int last = net.layer_count() - 1;
  NetGrads grads;
  if (param_grads) {
    grads.dw.resize(net.layer_count());
    grads.db.resize(net.layer_count());
  }
  Eigen::MatrixXd delta =
      dy.cwiseProduct(act_grad(net.output_act, cache.pre[last], cache.post[last]));
  for (int l = last; l >= 0; --l) {
    const Eigen::MatrixXd& below = (l == 0) ? cache.input : cache.post[l - 1];
    if (param_grads) {
      grads.dw[l] = delta * below.transpose();
      grads.db[l] = delta.rowwise().sum();
    }
    if (l > 0) {
      Eigen::MatrixXd dh = net.weights[l].transpose() * delta;
      delta = dh.cwiseProduct(act_grad(net.hidden_act, cache.pre[l - 1], cache.post[l - 1]));
    } else if (dx) {
      *dx = net.weights[0].transpose() * delta;
    }
  }
  return grads;
}

AdamState make_adam(const DenseNet& net, double lr, double l2) {
  AdamState s;
  s.lr = lr;
  s.l2 = l2;
  for (int l = 0; l < net.layer_count(); ++l) {
    s.mw.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.vw.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.mb.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    s.vb.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return s;
}

void adam_step(DenseNet& net, const NetGrads& grads, AdamState& state) {
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (int l = 0; l < net.layer_count(); ++l) {
    Eigen::MatrixXd gw = grads.dw[l];
    if (state.l2 != 0.0) gw += state.l2 * net.weights[l];
    state.mw[l] = state.beta1 * state.mw[l] + (1.0 - state.beta1) * gw;
    state.vw[l] = state.beta2 * state.vw[l] + (1.0 - state.beta2) * gw.cwiseProduct(gw);
    net.weights[l].array() -= state.lr * (state.mw[l].array() / c1) /
                              ((state.vw[l].array() / c2).sqrt() + state.eps);

    state.mb[l] = state.beta1 * state.mb[l] + (1.0 - state.beta1) * grads.db[l];
    state.vb[l] =
        state.beta2 * state.vb[l] + (1.0 - state.beta2) * grads.db[l].cwiseProduct(grads.db[l]);
    net.biases[l].array() -= state.lr * (state.mb[l].array() / c1) /
                             ((state.vb[l].array() / c2).sqrt() + state.eps);
  }
}

AdamVector make_adam_vector(int dim, double lr) {
  AdamVector s;
  s.lr = lr;
  s.m = Eigen::VectorXd::Zero(dim);
  s.v = Eigen::VectorXd::Zero(dim);
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamVector& state) {
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  params.array() -=
      state.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

void soft_update(DenseNet& target, const DenseNet& online, double tau) {
  for (int l = 0; l < target.layer_count(); ++l) {
    target.weights[l] = tau * online.weights[l] + (1.0 - tau) * target.weights[l];
    target.biases[l] = tau * online.biases[l] + (1.0 - tau) * target.biases[l];
  }
}

}  // namespace lemsim
