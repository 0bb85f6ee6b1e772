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

#include "repmeter/encoders.hpp"

namespace repmeter::encoders {
namespace {

Vector point(std::initializer_list<double> v) {
  Vector x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

Matrix well_conditioned(Index d, std::uint64_t seed) {
  CounterRng rng(seed);
  return Matrix::Identity(d, d) + 0.3 * rng.normal_matrix(d, d);
}

TEST(Encode, IdentityReturnsInput) {
  const Vector x = point({0.1, -2.0, 3.5, 0.0});
  EXPECT_TRUE(encode(identity("id", 4), x) == x);
}

TEST(Encode, FoldingCollidesMirroredInputs) {
  const auto f = folding("fold", 2, {0});
  EXPECT_TRUE(encode(f, point({1.0, 0.4})) == encode(f, point({-1.0, 0.4})));
  EXPECT_FALSE(f.invertible);
  const auto shifted = folding("fold", 2, {1}, 0.5);
  EXPECT_TRUE(encode(shifted, point({0.0, 0.2})) == encode(shifted, point({0.0, 0.8})));
}

TEST(Encode, RandomMlpMatchesNetworkForward) {
  const auto e = random_mlp("mlp", 4, {8, 8}, 3, 21);
  const nn::Network net = nn::init_network({4, 8, 8, 3}, 21);
  const Vector x = point({0.3, -0.1, 0.7, 1.2});
  const Vector expected = nn::forward(net, x.transpose()).row(0).transpose();
  EXPECT_TRUE(encode(e, x) == expected);
  EXPECT_EQ(e.label_provenance, "unknown");
}

TEST(Encode, WrongInputDimensionIsRejected) {
  EXPECT_THROW(encode(identity("id", 3), point({1.0, 2.0})), Error);
}

lagsim::Trajectory sample_trajectory(std::uint64_t seed) {
  auto spec = lagsim::double_integrator(2, 0.05);
  spec.q0_cov = Matrix::Identity(2, 2);
  return lagsim::rollout(spec, lagsim::ExplorationPolicy::random(2, 1.0), 20, seed);
}

TEST(EncodeTrajectory, IdentityEqualsStates) {
  const auto traj = sample_trajectory(1);
  const auto lt = encode_trajectory(identity("id", 4), traj, 0, "t0");
  EXPECT_TRUE(lt.latents == traj.state_matrix());
  EXPECT_EQ(lt.source_id, "t0");
  EXPECT_EQ(lt.encoder_id, "id");
}

TEST(EncodeTrajectory, CollapsingDropsVelocities) {
  const auto traj = sample_trajectory(2);
  const auto lt = encode_trajectory(collapsing("pos", 4, {2, 3}), traj, 0);
  EXPECT_EQ(lt.dim(), 2);
  EXPECT_TRUE(lt.latents == traj.state_matrix().leftCols(2));
}

TEST(EncodeTrajectory, ZeroNoiseEqualsClean) {
  const auto traj = sample_trajectory(3);
  const auto inner = smooth_bijection("t", well_conditioned(4, 1), Vector::Zero(4));
  const auto noisy = encode_trajectory(additive_noise("n", inner, 0.0, 5), traj, 9);
  const auto clean = encode_trajectory(inner, traj, 0);
  EXPECT_TRUE(noisy.latents == clean.latents);
}

TEST(EncodeTrajectory, NoiseIsSeeded) {
  const auto traj = sample_trajectory(4);
  const auto e = additive_noise("n", identity("i", 4), 1.0, 5);
  EXPECT_TRUE(encode_trajectory(e, traj, 9).latents == encode_trajectory(e, traj, 9).latents);
  EXPECT_FALSE(encode_trajectory(e, traj, 9).latents == encode_trajectory(e, traj, 10).latents);
}

TEST(Jacobian, AffineIsItsMatrix) {
  const Matrix a = well_conditioned(3, 4);
  const auto e = affine("a", a, point({1, 2, 3}));
  for (std::uint64_t s = 0; s < 3; ++s) EXPECT_TRUE(jacobian(e, CounterRng(s).normal_vector(3)) == a);
}

TEST(Jacobian, TanhAtOriginIsIdentity) {
  const auto e = smooth_bijection("t", Matrix::Identity(3, 3), Vector::Zero(3));
  EXPECT_TRUE(jacobian(e, Vector::Zero(3)).isApprox(Matrix::Identity(3, 3), 0.0));
}

TEST(Jacobian, RandomMlpAgreesWithBackward) {
  const auto e = random_mlp("mlp", 4, {16, 16}, 4, 8);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vector x = CounterRng(s).normal_vector(4);
    Matrix oracle(4, 4);
    for (Index o = 0; o < 4; ++o) {
      nn::ForwardCache cache;
      nn::forward(e.network, x.transpose(), &cache);
      Matrix seed_grad = Matrix::Zero(1, 4);
      seed_grad(0, o) = 1.0;
      oracle.row(o) = nn::backward(e.network, cache, seed_grad).input.row(0);
    }
    const Matrix fd = jacobian(e, x);
    const double rel = (fd - oracle).cwiseAbs().maxCoeff() / std::max(1e-8, oracle.cwiseAbs().maxCoeff());
    EXPECT_LT(rel, 1e-4);
  }
}

TEST(Jacobian, FoldIsNonDifferentiableOnItsFold) {
  const auto f = folding("fold", 2, {0});
  try {
    jacobian(f, point({0.0, 1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonDifferentiable);
  }
  EXPECT_EQ(jacobian(f, point({-0.5, 1.0}))(0, 0), -1.0);
}

TEST(LogAbsDet, ScaledIdentity) {
  const auto e = scaled_affine("s", 5, 3.0, Vector::Zero(5));
  EXPECT_NEAR(log_abs_det_jacobian(e, Vector::Zero(5)).value, 5.0 * std::log(3.0), 1e-12);
  const auto neg = scaled_affine("s", 3, -2.0, Vector::Zero(3));
  const auto r = log_abs_det_jacobian(neg, Vector::Zero(3));
  EXPECT_NEAR(r.value, 3.0 * std::log(2.0), 1e-12);
  EXPECT_EQ(r.sign, -1);
}

TEST(LogAbsDet, CollapsingIsNotSquare) {
  EXPECT_THROW(log_abs_det_jacobian(collapsing("c", 4, {3}), Vector::Zero(4)), Error);
}

TEST(LogAbsDet, TanhMatchesSingularValues) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto e = smooth_bijection("t", well_conditioned(4, 100 + s), CounterRng(s).normal_vector(4));
    const Vector x = CounterRng(50 + s).normal_vector(4);
    const Eigen::JacobiSVD<Matrix> svd(jacobian(e, x));
    const double oracle = svd.singularValues().array().log().sum();
    EXPECT_NEAR(log_abs_det_jacobian(e, x).value, oracle, 1e-10);
  }
}

TEST(LogAbsDet, SingularAffineIsNegativeInfinity) {
  Matrix a = Matrix::Identity(2, 2);
  a(1, 1) = 0.0;
  const auto r = log_abs_det_jacobian(affine("a", a, Vector::Zero(2)), Vector::Zero(2));
  EXPECT_TRUE(r.singular);
  EXPECT_EQ(r.value, kNegInf);
}

TEST(Invert, RoundTripsForInvertibleKinds) {
  const Matrix a = well_conditioned(4, 9);
  const std::vector<EncoderSpec> zoo{identity("i", 4), affine("a", a, point({1, 0, -1, 2})),
                                     scaled_affine("s", 4, 0.25, point({0, 1, 0, 1})),
                                     smooth_bijection("t", 0.3 * a, Vector::Zero(4)),
                                     additive_noise("n", identity("i", 4), 0.0, 1)};
  for (const auto& e : zoo) {
    ASSERT_TRUE(e.invertible) << e.id;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Vector x = CounterRng(s).normal_vector(4);
      EXPECT_LT((invert(e, encode(e, x)) - x).cwiseAbs().maxCoeff(), 1e-8) << e.id;
    }
  }
  EXPECT_THROW(invert(folding("f", 4), Vector::Zero(4)), Error);
}

TEST(Kinds, NamesRoundTrip) {
  for (const char* name : {"affine", "scaled-affine", "smooth-bijection", "collapsing-projection", "folding",
                           "additive-noise", "random-mlp"})
    EXPECT_STREQ(to_string(kind_from_string(name)), name);
  EXPECT_THROW(kind_from_string("spline"), Error);
}

}  // namespace
}  // namespace repmeter::encoders
