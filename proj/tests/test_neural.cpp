#include "lemsim/neural.hpp"

#include <doctest.h>

#include <random>

using namespace lemsim;

namespace {

double loss_of(const DenseNet& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) {
  return 0.5 * (forward(net, x) - target).squaredNorm();
}

// Central-difference check over every parameter. Inputs are redrawn until
// no pre-activation sits within `kink_guard` of a rectifier kink, where
// finite differences are invalid.
void gradient_check(DenseNet& net, std::mt19937_64& rng, double step = 1e-5,
                    double tol = 1e-4, double kink_guard = 1e-4) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(net.input_dim(), 3), target(net.output_dim(), 3);
  ForwardCache cache;
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (long i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    forward(net, x, &cache);
    bool safe = true;
    if (net.hidden_act == Act::kRelu) {
      for (size_t l = 0; l + 1 < cache.pre.size(); ++l)
        if ((cache.pre[l].array().abs() < kink_guard).any()) safe = false;
    }
    if (safe) break;
  }
  for (long i = 0; i < target.size(); ++i) target.data()[i] = g(rng);

  Eigen::MatrixXd y = forward(net, x, &cache);
  NetGrads grads = backward(net, cache, y - target);

  for (int l = 0; l < net.layer_count(); ++l) {
    for (long i = 0; i < net.weights[l].size(); ++i) {
      double saved = net.weights[l].data()[i];
      net.weights[l].data()[i] = saved + step;
      double up = loss_of(net, x, target);
      net.weights[l].data()[i] = saved - step;
      double down = loss_of(net, x, target);
      net.weights[l].data()[i] = saved;
      double fd = (up - down) / (2 * step);
      double an = grads.dw[l].data()[i];
      double err = std::abs(an - fd) / std::max(1.0, std::abs(an) + std::abs(fd));
      CHECK(err < tol);
    }
    for (long i = 0; i < net.biases[l].size(); ++i) {
      double saved = net.biases[l](i);
      net.biases[l](i) = saved + step;
      double up = loss_of(net, x, target);
      net.biases[l](i) = saved - step;
      double down = loss_of(net, x, target);
      net.biases[l](i) = saved;
      double fd = (up - down) / (2 * step);
      double an = grads.db[l](i);
      double err = std::abs(an - fd) / std::max(1.0, std::abs(an) + std::abs(fd));
      CHECK(err < tol);
    }
  }
}

}  // namespace

TEST_SUITE("neural") {

TEST_CASE("zero weights pass the bias through the output activation") {
  std::mt19937_64 rng(1);
  DenseNet net = make_dense_net({3, 4, 2}, Act::kRelu, Act::kIdentity, rng);
  for (auto& w : net.weights) w.setZero();
  net.biases[0].setZero();
  net.biases[1] << 0.7, -0.3;
  Eigen::VectorXd x(3);
  x << 5, -2, 1;
  Eigen::MatrixXd y = forward(net, x);
  CHECK(y(0, 0) == doctest::Approx(0.7));
  CHECK(y(1, 0) == doctest::Approx(-0.3));

  net.output_act = Act::kTanh;
  Eigen::MatrixXd yt = forward(net, x);
  CHECK(yt(0, 0) == doctest::Approx(std::tanh(0.7)));
}

TEST_CASE("an identity layer reproduces its input") {
  std::mt19937_64 rng(2);
  DenseNet net = make_dense_net({3, 3}, Act::kRelu, Act::kIdentity, rng);
  net.weights[0] = Eigen::MatrixXd::Identity(3, 3);
  net.biases[0].setZero();
  Eigen::MatrixXd x(3, 2);
  x << 1, -4, 2, 5, 3, -6;
  CHECK((forward(net, x) - x).norm() == doctest::Approx(0.0));
}

TEST_CASE("initialization and forward are deterministic per seed") {
  std::mt19937_64 a(33), b(33), c(34);
  DenseNet na = make_dense_net({5, 8, 2}, Act::kRelu, Act::kTanh, a);
  DenseNet nb = make_dense_net({5, 8, 2}, Act::kRelu, Act::kTanh, b);
  DenseNet nc = make_dense_net({5, 8, 2}, Act::kRelu, Act::kTanh, c);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1, 1);
  CHECK(forward(na, x) == forward(nb, x));
  CHECK(forward(na, x) != forward(nc, x));
}

TEST_CASE("scalar chain rule matches hand calculus") {
  // f(x) = w*x + b, loss = 0.5*(f - y)^2: dL/dw = (f-y)*x, dL/db = f-y.
  std::mt19937_64 rng(3);
  DenseNet net = make_dense_net({1, 1}, Act::kIdentity, Act::kIdentity, rng);
  net.weights[0](0, 0) = 1.7;
  net.biases[0](0) = 0.4;
  Eigen::MatrixXd x(1, 1), y_ref(1, 1);
  x << 2.0;
  y_ref << 1.0;
  ForwardCache cache;
  Eigen::MatrixXd f = forward(net, x, &cache);
  double fv = 1.7 * 2.0 + 0.4;
  CHECK(f(0, 0) == doctest::Approx(fv));
  NetGrads grads = backward(net, cache, f - y_ref);
  CHECK(grads.dw[0](0, 0) == doctest::Approx((fv - 1.0) * 2.0));
  CHECK(grads.db[0](0) == doctest::Approx(fv - 1.0));
}

TEST_CASE("analytic gradients agree with central differences") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 3; ++i) {
    DenseNet relu_net = make_dense_net({4, 8, 8, 2}, Act::kRelu, Act::kIdentity, rng);
    gradient_check(relu_net, rng);
    DenseNet tanh_net = make_dense_net({4, 8, 8, 1}, Act::kRelu, Act::kTanh, rng);
    gradient_check(tanh_net, rng);
  }
}

TEST_CASE("zero output gradient produces zero parameter gradients") {
  std::mt19937_64 rng(5);
  DenseNet net = make_dense_net({4, 8, 2}, Act::kRelu, Act::kTanh, rng);
  ForwardCache cache;
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
  forward(net, x, &cache);
  NetGrads grads = backward(net, cache, Eigen::MatrixXd::Zero(2, 5));
  for (const auto& dw : grads.dw) CHECK(dw.norm() == 0.0);
  for (const auto& db : grads.db) CHECK(db.norm() == 0.0);
}

TEST_CASE("input gradients flow through for the policy-gradient path") {
  std::mt19937_64 rng(6);
  DenseNet net = make_dense_net({3, 8, 1}, Act::kTanh, Act::kIdentity, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 1);
  ForwardCache cache;
  forward(net, x, &cache);
  Eigen::MatrixXd dx;
  backward(net, cache, Eigen::MatrixXd::Ones(1, 1), &dx, /*param_grads=*/false);
  // finite difference on one input coordinate
  double h = 1e-6;
  Eigen::MatrixXd xp = x, xm = x;
  xp(1, 0) += h;
  xm(1, 0) -= h;
  double fd = (forward(net, xp)(0, 0) - forward(net, xm)(0, 0)) / (2 * h);
  CHECK(dx(1, 0) == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("adam's first step has bias-corrected learning-rate magnitude") {
  std::mt19937_64 rng(7);
  DenseNet net = make_dense_net({1, 1}, Act::kIdentity, Act::kIdentity, rng);
  double w0 = net.weights[0](0, 0);
  AdamState opt = make_adam(net, 1e-3);
  NetGrads grads;
  grads.dw.push_back(Eigen::MatrixXd::Constant(1, 1, 0.5));
  grads.db.push_back(Eigen::VectorXd::Zero(1));
  adam_step(net, grads, opt);
  CHECK(net.weights[0](0, 0) == doctest::Approx(w0 - 1e-3).epsilon(1e-6));

  // Zero gradient leaves parameters alone.
  double w1 = net.weights[0](0, 0);
  grads.dw[0](0, 0) = 0.0;
  adam_step(net, grads, opt);
  CHECK(net.weights[0](0, 0) == w1);
}

TEST_CASE("two identical adam steps follow the accumulator recurrence") {
  std::mt19937_64 rng(8);
  DenseNet net = make_dense_net({1, 1}, Act::kIdentity, Act::kIdentity, rng);
  net.biases[0](0) = 0.0;
  double w = net.weights[0](0, 0);
  AdamState opt = make_adam(net, 1e-3);
  NetGrads grads;
  grads.dw.push_back(Eigen::MatrixXd::Constant(1, 1, 0.5));
  grads.db.push_back(Eigen::VectorXd::Zero(1));
  adam_step(net, grads, opt);
  adam_step(net, grads, opt);

  // Independent scalar replay of the recurrence.
  double g = 0.5, m = 0, v = 0, expect = w;
  for (int t = 1; t <= 2; ++t) {
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    double mhat = m / (1 - std::pow(0.9, t));
    double vhat = v / (1 - std::pow(0.999, t));
    expect -= 1e-3 * mhat / (std::sqrt(vhat) + 1e-8);
  }
  CHECK(net.weights[0](0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("soft updates blend and compose") {
  std::mt19937_64 rng(9);
  DenseNet online = make_dense_net({3, 4, 2}, Act::kRelu, Act::kTanh, rng);
  DenseNet target = make_dense_net({3, 4, 2}, Act::kRelu, Act::kTanh, rng);

  DenseNet t1 = target;
  soft_update(t1, online, 1.0);
  for (int l = 0; l < online.layer_count(); ++l) CHECK(t1.weights[l] == online.weights[l]);

  DenseNet t0 = target;
  soft_update(t0, online, 0.0);
  for (int l = 0; l < online.layer_count(); ++l) CHECK(t0.weights[l] == target.weights[l]);

  DenseNet tiny = target;
  tiny.weights[0].setZero();
  DenseNet ones = online;
  ones.weights[0].setOnes();
  soft_update(tiny, ones, 0.01);
  CHECK(tiny.weights[0](0, 0) == doctest::Approx(0.01));

  // Applying tau1 then tau2 equals one update with 1-(1-tau1)(1-tau2).
  DenseNet seq = target;
  soft_update(seq, online, 0.3);
  soft_update(seq, online, 0.2);
  DenseNet once = target;
  soft_update(once, online, 1.0 - (1.0 - 0.3) * (1.0 - 0.2));
  for (int l = 0; l < online.layer_count(); ++l) {
    CHECK((seq.weights[l] - once.weights[l]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((seq.biases[l] - once.biases[l]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

}  // TEST_SUITE
