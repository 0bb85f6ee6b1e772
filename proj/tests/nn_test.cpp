/*
 * Copyright 2026 The repmeter Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "repmeter/nn.hpp"

namespace repmeter::nn {
namespace {

TEST(InitNetwork, ParameterCountOfStatisticsNetwork) {
  const Network net = init_network({2, 64, 64, 1}, 0);
  EXPECT_EQ(net.parameter_count(), 4417);
  EXPECT_TRUE(net.valid());
  EXPECT_EQ(net.layers[0].activation, Activation::kRelu);
  EXPECT_EQ(net.layers[2].activation, Activation::kIdentity);
}

TEST(InitNetwork, SingleLinearLayerHasZeroBias) {
  const Network net = init_network({1, 1}, 7);
  ASSERT_EQ(net.layers.size(), 1u);
  EXPECT_EQ(net.layers[0].bias(0), 0.0);
  EXPECT_EQ(net.layers[0].activation, Activation::kIdentity);
}

TEST(InitNetwork, DeterministicAndBounded) {
  const Network a = init_network({3, 16, 2}, 42);
  const Network b = init_network({3, 16, 2}, 42);
  const Network c = init_network({3, 16, 2}, 43);
  for (std::size_t i = 0; i < a.layers.size(); ++i) EXPECT_TRUE(a.layers[i].weight == b.layers[i].weight);
  EXPECT_FALSE(a.layers[0].weight == c.layers[0].weight);
  const double limit = std::sqrt(6.0 / 19.0);
  EXPECT_LE(a.layers[0].weight.cwiseAbs().maxCoeff(), limit);
}

TEST(InitNetwork, RejectsBadSizes) {
  EXPECT_THROW(init_network({3}, 0), Error);
  EXPECT_THROW(init_network({3, 0, 1}, 0), Error);
  EXPECT_THROW(init_network(std::span<const Index>{}, 0), Error);
}

TEST(Forward, IdentityLayerPassesInput) {
  Network net = init_network({1, 1}, 0);
  net.layers[0].weight(0, 0) = 1.0;
  Matrix x(1, 1);
  x << 3.0;
  EXPECT_DOUBLE_EQ(forward(net, x)(0, 0), 3.0);
}

TEST(Forward, ReluClampsNegativeHidden) {
  Network net = init_network({1, 1, 1}, 0);
  net.layers[0].weight(0, 0) = 1.0;
  net.layers[1].weight(0, 0) = 1.0;
  Matrix x(1, 1);
  x << -1.0;
  ForwardCache cache;
  EXPECT_DOUBLE_EQ(forward(net, x, &cache)(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(cache.inputs[1](0, 0), 0.0);
}

TEST(Forward, MatchesScalarLoop) {
  const Network net = init_network({4, 7, 5, 3}, 11);
  CounterRng rng(5);
  const Matrix x = rng.normal_matrix(6, 4);
  const Matrix y = forward(net, x);
  for (Index b = 0; b < x.rows(); ++b) {
    std::vector<double> a;
    for (Index j = 0; j < 4; ++j) a.push_back(x(b, j));
    for (const auto& layer : net.layers) {
      std::vector<double> next(static_cast<std::size_t>(layer.out_dim()));
      for (Index o = 0; o < layer.out_dim(); ++o) {
        double s = layer.bias(o);
        for (Index i = 0; i < layer.in_dim(); ++i) s += layer.weight(o, i) * a[static_cast<std::size_t>(i)];
        next[static_cast<std::size_t>(o)] = layer.activation == Activation::kRelu ? std::max(0.0, s) : s;
      }
      a = next;
    }
    for (Index o = 0; o < 3; ++o) EXPECT_NEAR(y(b, o), a[static_cast<std::size_t>(o)], 1e-12);
  }
}

TEST(Forward, RejectsWidthMismatch) {
  const Network net = init_network({3, 2}, 0);
  EXPECT_THROW(forward(net, Matrix::Zero(2, 4)), Error);
}

TEST(Backward, ZeroOutputGradientGivesZeroGradients) {
  const Network net = init_network({3, 8, 2}, 1);
  ForwardCache cache;
  forward(net, CounterRng(2).normal_matrix(5, 3), &cache);
  const auto g = backward(net, cache, Matrix::Zero(5, 2));
  for (double v : flatten(g)) EXPECT_EQ(v, 0.0);
}

TEST(Backward, LinearLayerWeightGradientIsInput) {
  const Network net = init_network({3, 1}, 4);
  Matrix x(1, 3);
  x << 0.5, -2.0, 1.5;
  ForwardCache cache;
  forward(net, x, &cache);
  const auto g = backward(net, cache, Matrix::Ones(1, 1));
  for (Index j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(g.weight[0](0, j), x(0, j));
  EXPECT_DOUBLE_EQ(g.bias[0](0), 1.0);
}

TEST(Backward, MatchesCentralDifferencesOnTwentyCases) {
  for (std::uint64_t c = 0; c < 20; ++c) {
    CounterRng rng(derive_seed(100, c));
    const Index in = 1 + static_cast<Index>(rng.below(4));
    const Index hidden = 4 + static_cast<Index>(rng.below(8));
    const Index out = 1 + static_cast<Index>(rng.below(3));
    Network net = init_network({in, hidden, hidden, out}, derive_seed(200, c));
    // zero biases put exact zeros on ReLU kinks once a unit dies upstream
    for (auto& l : net.layers) l.bias = 0.1 * rng.normal_vector(l.out_dim());
    const Matrix x = rng.normal_matrix(4, in);
    const Matrix t = rng.normal_matrix(4, out);
    const auto check = gradient_check(net, x, t);
    EXPECT_LT(check.max_relative_error, 1e-4) << "case " << c;
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Network net = init_network({2, 3, 1}, 0);
  const Network before = net;
  auto state = AdamState::for_network(net, 1e-2);
  ForwardCache cache;
  forward(net, Matrix::Ones(2, 2), &cache);
  adam_step(net, backward(net, cache, Matrix::Zero(2, 1)), state);
  EXPECT_EQ(state.step, 1);
  for (std::size_t i = 0; i < net.layers.size(); ++i) EXPECT_TRUE(net.layers[i].weight == before.layers[i].weight);
}

TEST(Adam, FirstStepMovesBySignedLearningRate) {
  Network net = init_network({3, 2}, 9);
  const Network before = net;
  const double lr = 0.01;
  auto state = AdamState::for_network(net, lr);
  Gradients g;
  g.weight.push_back(Matrix::Constant(2, 3, 0.3));
  g.weight[0](1, 2) = -4.0;
  g.bias.push_back(Vector::Constant(2, 1e-3));
  adam_step(net, g, state);
  for (Index r = 0; r < 2; ++r)
    for (Index c = 0; c < 3; ++c) {
      const double gi = g.weight[0](r, c);
      EXPECT_NEAR(net.layers[0].weight(r, c) - before.layers[0].weight(r, c), -lr * gi / (std::abs(gi) + 1e-8), 1e-15);
    }
  EXPECT_NEAR(net.layers[0].bias(0), -lr * 1e-3 / (1e-3 + 1e-8), 1e-15);
}

TEST(Adam, ConvexQuadraticLossDecreases) {
  // Fit y = 2x - 1 with a linear unit, loss 0.5 (w x + b - y)^2.
  Network net = init_network({1, 1}, 3);
  auto state = AdamState::for_network(net, 0.05);
  Matrix x(8, 1);
  for (Index i = 0; i < 8; ++i) x(i, 0) = -1.0 + 0.25 * static_cast<double>(i);
  const Matrix y = (2.0 * x).array() - 1.0;
  std::vector<double> losses;
  for (int step = 0; step < 300; ++step) {
    ForwardCache cache;
    const Matrix out = forward(net, x, &cache);
    losses.push_back(0.5 * (out - y).squaredNorm() / 8.0);
    adam_step(net, backward(net, cache, out - y), state);
  }
  for (std::size_t i = 51; i < losses.size(); i += 25) EXPECT_LT(losses[i], losses[i - 25]);
  EXPECT_LT(losses.back(), 1e-3);
}

TEST(Adam, NonFiniteGradientIsNumericFailure) {
  Network net = init_network({1, 1}, 0);
  auto state = AdamState::for_network(net, 0.1);
  Gradients g;
  g.weight.push_back(Matrix::Constant(1, 1, std::nan("")));
  g.bias.push_back(Vector::Zero(1));
  try {
    adam_step(net, g, state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumericFailure);
  }
  EXPECT_EQ(state.step, 0);
}

TEST(Standardizer, ZeroVarianceColumnKeepsUnitScale) {
  Matrix x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  const auto s = Standardizer::fit(x);
  EXPECT_DOUBLE_EQ(s.scale(1), 1.0);
  const Matrix z = s.apply(x);
  EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(z(0, 1), 0.0);
}

}  // namespace
}  // namespace repmeter::nn
