// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "helpers.hpp"

using namespace polyapprox;
using testutil::gradient_check;
using testutil::random_tensor;

TEST(Tensor, RejectsZeroDimsAndLengthMismatch) {
  EXPECT_THROW(Tensor({3, 0}), Error);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), Error);
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t[5], 1.5);
  EXPECT_THROW(t.reshaped({4}), Error);
  EXPECT_EQ(t.reshaped({3, 2}).shape(), (Shape{3, 2}));
}

TEST(Tensor, FiniteCheck) {
  Tensor t({2}, 0.0);
  EXPECT_TRUE(t.all_finite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Conv, MatchesDirectLoopOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t C = 1 + rng.below(3), K = 1 + rng.below(4);
    const std::size_t kh = 1 + rng.below(4), kw = 1 + rng.below(4);
    const std::size_t H = kh + rng.below(5), W = kw + rng.below(5);
    const Tensor x = random_tensor(rng, {H, W, C});
    const Tensor w = random_tensor(rng, {kh, kw, C, K});
    const Tensor y = conv2d_valid(x, w);
    EXPECT_LT(max_abs_diff(y.data(), testutil::conv_oracle(x, w).data()), 1e-13);
  }
}

TEST(Conv, ShapeErrors) {
  EXPECT_THROW(conv2d_valid(Tensor({4, 4, 2}), Tensor({3, 3, 1, 1})), Error);
  EXPECT_THROW(conv2d_valid(Tensor({2, 4, 1}), Tensor({3, 3, 1, 1})), Error);
}

TEST(Conv, AllOnesWindowSum) {
  const Tensor y = conv2d_valid(Tensor({5, 5, 1}, 1.0), Tensor({3, 3, 1, 1}, 1.0));
  EXPECT_EQ(y.shape(), (Shape{3, 3, 1}));
  for (double v : y.data()) EXPECT_EQ(v, 9.0);
}

TEST(Ops, PadCropRoundTrip) {
  Rng rng(3);
  const Tensor x = random_tensor(rng, {3, 4, 2});
  const Tensor p = pad2d(x, 2);
  EXPECT_EQ(p.shape(), (Shape{7, 8, 2}));
  EXPECT_EQ(p.at(0, 0, 1), 0.0);
  EXPECT_EQ(p.at(2, 2, 1), x.at(0, 0, 1));
  EXPECT_EQ(crop2d(p, 2), x);
}

TEST(Ops, AvgPoolValues) {
  Tensor x({2, 4, 1}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  const Tensor y = avg_pool2(x);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 1}));
  EXPECT_DOUBLE_EQ(y[0], (1 + 2 + 5 + 6) / 4.0);
  EXPECT_DOUBLE_EQ(y[1], (3 + 4 + 7 + 8) / 4.0);
  EXPECT_THROW(avg_pool2(Tensor({3, 4, 1})), Error);
}

TEST(Ops, SoftmaxStableAndNormalised) {
  const Tensor y = softmax(Tensor({3}, std::vector<double>{1000, 1001, 999}));
  EXPECT_NEAR(y[0] + y[1] + y[2], 1.0, 1e-15);
  EXPECT_GT(y[1], y[0]);
  EXPECT_TRUE(y.all_finite());
}

TEST(Ops, SgdStep) {
  std::vector<double> w{1.0, -2.0}, g{0.5, 0.25};
  sgd_step(w, g, 0.1);
  EXPECT_DOUBLE_EQ(w[0], 1.0 - 0.05);
  EXPECT_DOUBLE_EQ(w[1], -2.0 - 0.025);
}

TEST(Rng, DeterministicUniformAndShuffle) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform(-0.5, 0.25);
    EXPECT_GE(u, -0.5);
    EXPECT_LT(u, 0.25);
  }
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  r.shuffle(std::span<int>(v));
  EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 50u);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(Network, ShapesResolve) {
  const NetworkSpec cnn = arch::mnist_cnn();
  EXPECT_EQ(cnn.output_shape(), (Shape{10}));
  EXPECT_EQ(cnn.weight_shape(0), (Shape{5, 5, 1, 6}));
  EXPECT_EQ(cnn.weight_shape(1), (Shape{5, 5, 6, 12}));
  EXPECT_EQ(cnn.weight_shape(2), (Shape{10, 192}));
  EXPECT_EQ(arch::mnist_fc_64_32().weight_count(), 52544u);
  EXPECT_EQ(arch::lenet_300_100().weight_count(), 266200u);
  EXPECT_EQ(arch::lenet5().weight_count(), 430500u);
  EXPECT_EQ(arch::cifar_cnn().weight_count(), 521824u);
  EXPECT_THROW(NetworkSpec({28, 28, 1}, {Dense{784, 10}}), Error);  // dense needs a flat input
  EXPECT_THROW(arch::by_name("resnet"), Error);
}

TEST(Network, InitIsSeededAndBounded) {
  const NetworkSpec net = arch::mnist_fc_64_32();
  const Parameters a = init_parameters(net, 9), b = init_parameters(net, 9), c = init_parameters(net, 10);
  EXPECT_TRUE(a.same_values(b));
  EXPECT_FALSE(a.same_values(c));
  const double r = std::sqrt(6.0 / (784 + 64));
  for (double w : a.layers[0].weights.data()) EXPECT_LE(std::abs(w), r);
  for (double v : a.layers[0].bias) EXPECT_EQ(v, 0.0);
}

TEST(Backprop, FiniteDifferenceCnnCrossEntropy) {
  const NetworkSpec net = testutil::tiny_cnn();
  EXPECT_LE(net.weight_count(), 500u);
  EXPECT_LT(gradient_check(net, Loss::cross_entropy, 1), 1e-5);
}

TEST(Backprop, FiniteDifferenceCnnMse) {
  EXPECT_LT(gradient_check(testutil::tiny_cnn(), Loss::mean_squared_error, 2), 1e-5);
}

TEST(Backprop, FiniteDifferenceMlp) {
  EXPECT_LT(gradient_check(testutil::tiny_mlp(), Loss::cross_entropy, 3), 1e-5);
  EXPECT_LT(gradient_check(testutil::tiny_mlp(), Loss::mean_squared_error, 4), 1e-5);
}

TEST(Backprop, StaleCacheRejected) {
  const NetworkSpec net = testutil::tiny_mlp();
  Parameters p = init_parameters(net, 1);
  const ForwardResult fr = forward(net, p, Tensor({4, 4, 1}, 0.5));
  const Tensor t = one_hot(1, 4);
  EXPECT_NO_THROW(backward(net, p, fr.cache, t));
  p.touch();
  try {
    backward(net, p, fr.cache, t);
    FAIL() << "expected stale cache error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::kStaleCache);
  }
}

TEST(Backprop, CrossEntropyMatchesClosedForm) {
  const NetworkSpec net = testutil::tiny_mlp();
  const Parameters p = init_parameters(net, 7);
  const ForwardResult fr = forward(net, p, Tensor({4, 4, 1}, 0.25));
  const Tensor t = one_hot(2, 4);
  EXPECT_NEAR(example_loss(net, fr.cache, t, Loss::cross_entropy), -std::log(fr.output[2]), 1e-12);
  double mse = 0;
  for (std::size_t i = 0; i < 4; ++i) mse += (fr.output[i] - t[i]) * (fr.output[i] - t[i]);
  EXPECT_NEAR(example_loss(net, fr.cache, t, Loss::mean_squared_error), mse, 1e-15);
}
