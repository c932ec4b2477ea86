#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dabid/neuralnet.hpp"
#include "fixtures.hpp"

namespace dabid {
namespace {

Mlp random_net(std::vector<int> sizes, std::uint64_t seed, Activation act = Activation::kTanh) {
  Mlp net(std::move(sizes), act);
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 0.7);
  for (auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = n(rng);
  }
  return net;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Scalar loss whose output gradient is g: sum_j g_j . net(x_j).
double probe_loss(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g) {
  return (net.forward(x).array() * g.array()).sum();
}

double max_fd_relative_error(Mlp net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g) {
  const GradientSet analytic = net.backward(x, g);
  const double h = 1e-5;
  double worst = 0.0;
  auto check = [&](double& param, double grad) {
    const double saved = param;
    param = saved + h;
    const double up = probe_loss(net, x, g);
    param = saved - h;
    const double down = probe_loss(net, x, g);
    param = saved;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::fabs(fd - grad) / std::max(1.0, std::fabs(fd) + std::fabs(grad)));
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) check(layer.weight.data()[i], analytic.layers[l].weight.data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) check(layer.bias[i], analytic.layers[l].bias[i]);
  }
  return worst;
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  Rng shapes(2024);
  std::uniform_int_distribution<int> width(1, 9);
  for (int trial = 0; trial < 24; ++trial) {
    std::vector<int> sizes{width(shapes), width(shapes), width(shapes)};
    if (trial % 3 == 0) sizes.insert(sizes.begin() + 1, width(shapes));
    const Mlp net = random_net(sizes, 100 + trial);
    Rng rng(500 + trial);
    const Eigen::MatrixXd x = random_matrix(sizes.front(), 3, rng);
    const Eigen::MatrixXd g = random_matrix(sizes.back(), 3, rng);
    EXPECT_LT(max_fd_relative_error(net, x, g), 1e-4) << "trial " << trial;
  }
  Rng rng(1);
  const Mlp net = random_net({10, 8, 4}, 7);
  EXPECT_LT(max_fd_relative_error(net, random_matrix(10, 1, rng), random_matrix(4, 1, rng)), 1e-4);
}

TEST(Mlp, ZeroNetGivesZeroOutput) {
  const Mlp net({5, 7, 3});
  EXPECT_EQ(net.forward(Eigen::VectorXd(Eigen::VectorXd::Constant(5, 2.0))), Eigen::VectorXd::Zero(3));
}

TEST(Mlp, OneByOneClosedForm) {
  Mlp net({1, 1, 1});
  net.layers()[0].weight(0, 0) = 1.0;
  net.layers()[1].weight(0, 0) = 1.7;
  EXPECT_DOUBLE_EQ(net.forward(Eigen::VectorXd(Eigen::VectorXd::Constant(1, 0.5)))[0], std::tanh(0.5) * 1.7);
}

TEST(Mlp, ZeroOutputGradientGivesZeroGradients) {
  const Mlp net = random_net({4, 6, 2}, 3);
  const GradientSet g = net.backward(Eigen::VectorXd(Eigen::VectorXd::Ones(4)), Eigen::VectorXd(Eigen::VectorXd::Zero(2)));
  for (const auto& layer : g.layers) {
    EXPECT_EQ(layer.weight.norm(), 0.0);
    EXPECT_EQ(layer.bias.norm(), 0.0);
  }
}

TEST(Mlp, LinearNetGradientIsOuterProduct) {
  const Mlp net = random_net({3, 2}, 5, Activation::kIdentity);
  const Eigen::Vector3d x(0.5, -1.0, 2.0);
  const Eigen::Vector2d g(1.5, -0.25);
  const GradientSet grads = net.backward(Eigen::VectorXd(x), Eigen::VectorXd(g));
  EXPECT_LT((grads.layers[0].weight - g * x.transpose()).norm(), 1e-15);
  EXPECT_LT((grads.layers[0].bias - g).norm(), 1e-15);
}

TEST(Mlp, ShapeMismatchThrows) {
  const Mlp net({3, 4, 2});
  EXPECT_THROW(net.forward(Eigen::VectorXd(Eigen::VectorXd::Zero(4))), ValidationError);
  EXPECT_THROW(net.backward(Eigen::VectorXd(Eigen::VectorXd::Zero(3)), Eigen::VectorXd(Eigen::VectorXd::Zero(3))), ValidationError);
}

TEST(OrthogonalInit, RowsOrColumnsAreOrthonormal) {
  Mlp net({141, 200, 96});
  const double gains[] = {1.0, 0.01};
  orthogonal_init(net, 11, gains);
  for (std::size_t l = 0; l < 2; ++l) {
    const Eigen::MatrixXd& w = net.layers()[l].weight;
    const Eigen::MatrixXd gram = w.rows() < w.cols() ? Eigen::MatrixXd(w * w.transpose()) : Eigen::MatrixXd(w.transpose() * w);
    const Eigen::MatrixXd target = gains[l] * gains[l] * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    EXPECT_LT((gram - target).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(net.layers()[l].bias.norm(), 0.0);
  }
  Mlp again({141, 200, 96});
  orthogonal_init(again, 11, gains);
  EXPECT_EQ(again.layers()[0].weight, net.layers()[0].weight);

  Mlp square({200, 200});
  const double one[] = {1.0};
  orthogonal_init(square, 3, one);
  EXPECT_GT(std::fabs(square.layers()[0].weight.determinant()), 0.5);

  Rng rng(9);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  Eigen::VectorXd x(141);
  for (int i = 0; i < 141; ++i) x[i] = u(rng);
  EXPECT_TRUE(net.forward(x).allFinite());
}

TEST(RmsProp, ConstantGradientStepApproachesLearningRate) {
  std::vector<double> p{0.0, 0.0};
  std::vector<double> g{0.3, -7.0};
  RmsPropState state;
  const RmsPropConfig config{};
  const std::span<double> pb[] = {p};
  const std::span<double> gb[] = {g};
  std::vector<double> before;
  for (int i = 0; i < 1000; ++i) {
    before = p;
    rmsprop_step(pb, gb, state, config);
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double step = std::fabs(p[i] - before[i]);
    EXPECT_GE(step, 0.5 * config.learning_rate);
    EXPECT_LE(step, 1.5 * config.learning_rate);
  }
}

TEST(RmsProp, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, 2.0};
  std::vector<double> g{0.0, 0.0};
  RmsPropState state;
  const std::span<double> pb[] = {p};
  const std::span<double> gb[] = {g};
  rmsprop_step(pb, gb, state, {});
  EXPECT_EQ(p, (std::vector<double>{1.0, 2.0}));
}

TEST(RmsProp, NonFiniteGradientThrowsWithoutTouchingState) {
  std::vector<double> p{1.0, 2.0};
  std::vector<double> g{0.5, std::nan("")};
  RmsPropState state;
  const std::span<double> pb[] = {p};
  const std::span<double> gb[] = {g};
  EXPECT_THROW(rmsprop_step(pb, gb, state, {}), TrainingDivergedError);
  EXPECT_EQ(p, (std::vector<double>{1.0, 2.0}));
  EXPECT_TRUE(state.square_avg.empty());
}

TEST(RmsProp, IdenticalStartsGiveIdenticalTrajectories) {
  auto run = [] {
    PolicyParams policy = PolicyParams::create(12, 8, -1.0, 4);
    RmsPropState state;
    Rng rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      PolicyGradients grads = PolicyGradients::zeros_like(policy);
      for (auto block : gradient_blocks(grads)) {
        for (double& v : block) v = n(rng);
      }
      rmsprop_step(parameter_blocks(policy), gradient_blocks(grads), state, {});
    }
    return policy_to_json(policy);
  };
  EXPECT_EQ(run(), run());
}

TEST(ClipGradNorm, ScalesDownOnlyLargeNorms) {
  std::vector<double> a{3.0, 4.0};
  const std::span<double> blocks[] = {a};
  EXPECT_DOUBLE_EQ(clip_grad_norm(blocks, 10.0), 5.0);
  EXPECT_EQ(a, (std::vector<double>{3.0, 4.0}));
  clip_grad_norm(blocks, 0.5);
  EXPECT_NEAR(std::hypot(a[0], a[1]), 0.5, 1e-6);
}

TEST(PolicyParams, ShapesAndSerialization) {
  PolicyParams p = PolicyParams::create(141, 200, -1.0, 8);
  p.normalization.price_scale = 251.25;
  EXPECT_EQ(p.actor.sizes(), (std::vector<int>{141, 200, 96}));
  EXPECT_EQ(p.critic.sizes(), (std::vector<int>{141, 200, 1}));
  EXPECT_EQ(p.log_std, Eigen::VectorXd::Constant(96, -1.0));

  testing::TempDir dir;
  save_policy(p, dir / "policy.json");
  const PolicyParams q = load_policy(dir / "policy.json");
  Rng rng(3);
  const Eigen::MatrixXd x = random_matrix(141, 4, rng);
  EXPECT_EQ(p.actor.forward(x), q.actor.forward(x));
  EXPECT_EQ(p.critic.forward(x), q.critic.forward(x));
  EXPECT_EQ(p.log_std, q.log_std);
  EXPECT_EQ(q.normalization.price_scale, 251.25);
  EXPECT_THROW(load_policy(dir / "absent.json"), MissingArtifactError);
  EXPECT_THROW(policy_from_json("{not json"), ParseError);
}

}  // namespace
}  // namespace dabid
