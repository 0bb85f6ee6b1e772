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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "repmeter/dpi.hpp"
#include "repmeter/entropy.hpp"
#include "repmeter/gaussian.hpp"
#include "repmeter/knn.hpp"
#include "repmeter/probe.hpp"
#include "repmeter/smoothness.hpp"

namespace repmeter {
namespace {

using encoders::LatentTrajectory;

// Random walks in R^d with N(0, step_var I) increments, wrapped as trajectories.
std::vector<lagsim::Trajectory> random_walks(int count, Index length, Index dof, double step_var, std::uint64_t seed) {
  std::vector<lagsim::Trajectory> out;
  for (int r = 0; r < count; ++r) {
    CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    lagsim::Trajectory t;
    t.sample_time = 0.05;
    Vector z = 3.0 * rng.normal_vector(2 * dof);
    for (Index n = 0; n < length; ++n) {
      t.states.push_back({z.head(dof), z.tail(dof)});
      if (n + 1 < length) t.torques.push_back(Vector::Zero(dof));
      z += std::sqrt(step_var) * rng.normal_vector(2 * dof);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<LatentTrajectory> encode_each(const encoders::EncoderSpec& e, const std::vector<lagsim::Trajectory>& t) {
  return encoders::encode_all(e, t);
}

// --- kNN entropy ---------------------------------------------------------------

TEST(KdTree, MatchesBruteForce) {
  CounterRng rng(3);
  const Matrix pts = rng.normal_matrix(700, 3);
  const KdTree tree(pts, 8);
  for (Index q = 0; q < 40; ++q) {
    const Index query = static_cast<Index>(rng.below(700));
    std::vector<std::pair<double, Index>> all;
    for (Index i = 0; i < pts.rows(); ++i)
      if (i != query) all.emplace_back((pts.row(i) - pts.row(query)).squaredNorm(), i);
    std::sort(all.begin(), all.end());
    const auto nb = tree.nearest(pts.row(query), 6, query);
    ASSERT_EQ(nb.size(), 6u);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(nb[j].squared_distance, all[j].first);
  }
}

TEST(KnnEntropy, UniformUnitSquareIsZero) {
  CounterRng rng(1);
  Matrix u(10000, 2);
  for (Index i = 0; i < u.size(); ++i) u.data()[i] = rng.uniform();
  EXPECT_NEAR(knn_entropy(u, 5), 0.0, 0.05);
}

TEST(KnnEntropy, StandardNormal2d) {
  EXPECT_NEAR(knn_entropy(CounterRng(2).normal_matrix(10000, 2), 5), std::log(2.0 * std::numbers::pi * std::numbers::e), 0.05);
  EXPECT_NEAR(std::log(2.0 * std::numbers::pi * std::numbers::e), 2.8379, 1e-4);
}

TEST(KnnEntropy, ScaledNormal1d) {
  const Matrix x = 2.0 * CounterRng(3).normal_matrix(10000, 1);
  EXPECT_NEAR(knn_entropy(x, 5), 2.1121, 0.05);
  EXPECT_NEAR(gaussian_entropy(Matrix::Constant(1, 1, 4.0)), 2.1121, 1e-4);
}

TEST(KnnEntropy, ShiftsByLogScale) {
  const Matrix x = CounterRng(4).normal_matrix(2000, 3);
  EXPECT_NEAR(knn_entropy(10.0 * x) - knn_entropy(x), 3.0 * std::log(10.0), 1e-9);
}

TEST(KnnEntropy, DuplicatesAreJitteredDeterministically) {
  Matrix x = CounterRng(5).normal_matrix(500, 2);
  x.bottomRows(100) = x.topRows(100);
  const double a = knn_entropy(x, 5, 7);
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_EQ(a, knn_entropy(x, 5, 7));
}

TEST(KnnEntropy, ConstantSamplesAreDegenerate) {
  try {
    knn_entropy(Matrix::Ones(100, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(KnnEntropy, UnitBallVolume) {
  EXPECT_NEAR(std::exp(log_unit_ball_volume(1)), 2.0, 1e-12);
  EXPECT_NEAR(std::exp(log_unit_ball_volume(2)), std::numbers::pi, 1e-12);
  EXPECT_NEAR(std::exp(log_unit_ball_volume(3)), 4.0 / 3.0 * std::numbers::pi, 1e-12);
}

// --- Gaussian oracles ------------------------------------------------------------

TEST(GaussianOracle, ZeroMapCarriesNothing) {
  EXPECT_EQ(gaussian_mi_oracle(Matrix::Zero(2, 3), Matrix::Identity(3, 3), 1.0), 0.0);
}

TEST(GaussianOracle, ScalarChannel) {
  EXPECT_NEAR(gaussian_mi_oracle(Matrix::Ones(1, 1), Matrix::Ones(1, 1), 1.0), 0.5 * std::log(2.0), 1e-15);
  EXPECT_NEAR(gaussian_mi_oracle(Matrix::Ones(1, 1), Matrix::Ones(1, 1), 1.0), 0.3466, 1e-4);
}

TEST(GaussianOracle, Correlation) {
  EXPECT_NEAR(gaussian_mi_correlation(0.5), 0.1438, 1e-4);
  EXPECT_NEAR(gaussian_mi_correlation(0.9), 0.8304, 1e-4);
  Matrix joint(2, 2);
  joint << 1.0, 0.5, 0.5, 1.0;
  EXPECT_NEAR(gaussian_mi_joint(joint, 1), gaussian_mi_correlation(0.5), 1e-14);
}

TEST(GaussianChain, DeterministicEncoderHasUnboundedObservationMi) {
  const auto chain = replicated_chain(2, 1.0, 0.0);
  EXPECT_EQ(chain.mi_latent_obs(), kPosInf);
  EXPECT_TRUE(std::isfinite(chain.mi_latent_state()));
}

TEST(GaussianChain, NoiselessObservationCollapsesChain) {
  GaussianChain c;
  c.observation = Matrix::Identity(2, 2);
  c.obs_noise = 0.0;
  c.encoder = Matrix::Identity(2, 2) + Matrix::Constant(2, 2, 0.2);
  c.enc_noise = 0.7;
  EXPECT_NEAR(c.mi_latent_state(), c.mi_latent_obs(), 1e-12);
}

TEST(GaussianChain, NoisyObservationGapMatchesSampleCovariance) {
  const auto chain = replicated_chain(2, 2.0, 0.5);
  const double gap = chain.mi_latent_obs() - chain.mi_latent_state();
  EXPECT_GT(gap, 0.1);
  const auto d = chain.sample(200000, 4);
  auto empirical = [](const Matrix& a, const Matrix& b) {
    Matrix joined(a.rows(), a.cols() + b.cols());
    joined << a, b;
    const Matrix c = joined.rowwise() - joined.colwise().mean();
    return gaussian_mi_joint(c.transpose() * c / static_cast<double>(a.rows() - 1), a.cols());
  };
  EXPECT_NEAR(empirical(d.latent, d.obs) - empirical(d.latent, d.state), gap, 0.02);
  EXPECT_NEAR(chain.mi_latent_obs(), 0.5 * std::log(1.0 + 3.0 / 0.25), 1e-12);
}

// --- smoothness bound, alpha ---------------------------------------------------

TEST(SmoothnessBound, AnisotropicJacobianExample) {
  const double alpha = 0.37;
  const double bound = smoothness_bound_from_moment(5.0 * alpha, alpha, 2);
  EXPECT_NEAR(bound, std::log(2.5), 1e-12);
  EXPECT_NEAR(bound, 0.9163, 1e-4);
  EXPECT_GE(bound, std::log(2.0));
}

TEST(SmoothnessBound, ScaledIdentityIsTight) {
  for (double c : {0.1, 2.0, 10.0})
    EXPECT_NEAR(smoothness_bound_from_moment(c * c * kDefaultAlpha * 4, kDefaultAlpha, 4), 4.0 * std::log(c), 1e-12);
}

TEST(SmoothnessBound, FoldingNeverExceedsIdentity) {
  const auto walks = random_walks(5, 200, 2, 0.05, 3);
  const double id = smoothness_bound(encode_each(encoders::identity("i", 4), walks), kDefaultAlpha).value;
  const double fold = smoothness_bound(encode_each(encoders::folding("f", 4, {0, 1}), walks), kDefaultAlpha).value;
  EXPECT_LE(fold, id);
}

TEST(SmoothnessBound, ConstantLatentIsNegativeInfinity) {
  LatentTrajectory lt;
  lt.latents = Matrix::Ones(10, 2);
  const auto b = smoothness_bound({lt}, kDefaultAlpha);
  EXPECT_TRUE(b.constant);
  EXPECT_EQ(b.value, kNegInf);
}

TEST(Alpha, RecoversIsotropicVariance) {
  const Matrix d = std::sqrt(0.12) * CounterRng(8).normal_matrix(10000, 4);
  EXPECT_NEAR(estimate_alpha_from_differences(d).alpha, 0.12, 0.005);
}

TEST(Alpha, ZeroDifferencesAreDegenerate) {
  const auto a = estimate_alpha_from_differences(Matrix::Zero(200, 3));
  EXPECT_EQ(a.alpha, 0.0);
  EXPECT_TRUE(a.degenerate);
}

TEST(Alpha, AnisotropicMoments) {
  // exact +-1 and +-2 patterns give variances 1 and 4 without sampling error
  Matrix d(400, 2);
  for (Index i = 0; i < 400; ++i) {
    d(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
    d(i, 1) = ((i / 2) % 2 == 0) ? 2.0 : -2.0;
  }
  const auto a = estimate_alpha_from_differences(d);
  const double correction = 399.0 / 400.0;  // sample variance uses S - 1
  EXPECT_NEAR(a.alpha * correction, 2.5, 1e-12);
  EXPECT_NEAR(a.anisotropy, 4.0, 1e-12);
}

// --- uniqueness score ----------------------------------------------------------

TEST(Uniqueness, IdentityScoreApproachesStateEntropy) {
  const auto walks = random_walks(20, 250, 1, kDefaultAlpha, 9);
  const auto latents = encode_each(encoders::identity("i", 2), walks);
  const auto u = uniqueness_score(latents, walks, kDefaultAlpha);
  ASSERT_TRUE(u.score.has_value());
  EXPECT_NEAR(*u.bound, 0.0, 0.03);
  EXPECT_NEAR(*u.score, knn_entropy(pooled_states(walks)), 0.05);
}

TEST(Uniqueness, ScaledEncoderScoreIsInvariant) {
  const auto walks = random_walks(10, 200, 2, 0.05, 10);
  const double base = *uniqueness_score(encode_each(encoders::identity("i", 4), walks), walks, kDefaultAlpha).score;
  for (double c : {0.1, 10.0}) {
    const auto e = encoders::scaled_affine("s", 4, c, Vector::Zero(4));
    EXPECT_NEAR(*uniqueness_score(encode_each(e, walks), walks, kDefaultAlpha).score, base, 0.1) << c;
  }
}

TEST(Uniqueness, NonSquarePipelineReportsEntropyOnly) {
  const auto walks = random_walks(5, 100, 2, 0.05, 11);
  const auto u = uniqueness_score(encode_each(encoders::collapsing("c", 4, {2, 3}), walks), walks, kDefaultAlpha);
  EXPECT_FALSE(u.score.has_value());
  EXPECT_FALSE(u.bound.has_value());
  EXPECT_TRUE(std::isfinite(u.entropy));
  EXPECT_GT(u.mean_step_norm, 0.0);
}

// --- temporal profile, ratio histogram ------------------------------------------

TEST(TemporalProfile, ConstantLatentIsZero) {
  LatentTrajectory lt;
  lt.latents = Matrix::Constant(30, 3, 2.0);
  for (const auto& [t, d] : temporal_distance_profile({lt}, {0, 1, 5, 20})) EXPECT_EQ(d, 0.0) << t;
}

TEST(TemporalProfile, RampGivesOffset) {
  LatentTrajectory lt;
  lt.latents.resize(50, 1);
  for (Index n = 0; n < 50; ++n) lt.latents(n, 0) = static_cast<double>(n);
  for (const auto& [t, d] : temporal_distance_profile({lt}, {1, 2, 7, 30})) EXPECT_EQ(d, static_cast<double>(t));
}

TEST(TemporalProfile, RandomWalkGrowsAsSquareRoot) {
  const auto walks = random_walks(200, 120, 1, 0.01, 12);
  const auto p = temporal_distance_profile(encode_each(encoders::identity("i", 2), walks), {4, 16, 64});
  const double c4 = p[0].second / 2.0;
  EXPECT_NEAR(p[1].second / 4.0, c4, 0.05 * c4);
  EXPECT_NEAR(p[2].second / 8.0, c4, 0.05 * c4);
}

TEST(TemporalProfile, OffsetMustFit) {
  LatentTrajectory lt;
  lt.latents = Matrix::Zero(5, 1);
  EXPECT_THROW(temporal_distance_profile({lt}, {5}), Error);
}

TEST(RatioHistogram, IdentityMassAtOne) {
  const auto walks = random_walks(3, 100, 2, 0.05, 13);
  // bins centred on 1 so rounding in the ratio cannot cross an edge
  const auto h = smoothness_ratio_histogram(encode_each(encoders::identity("i", 4), walks), walks, {21, -0.05, 2.05});
  const std::size_t bin = h.bin_of(1.0);
  EXPECT_EQ(h.counts[bin], h.total());
  EXPECT_EQ(h.total(), 3 * 99);
}

TEST(RatioHistogram, ScaledMassAtScale) {
  const auto walks = random_walks(3, 100, 2, 0.05, 14);
  const auto e = encoders::scaled_affine("s", 4, 3.0, Vector::Zero(4));
  const auto h = smoothness_ratio_histogram(encode_each(e, walks), walks, {10, 0.25, 5.25});
  EXPECT_EQ(h.counts[h.bin_of(3.0)], h.total());
  EXPECT_EQ(h.counts.size(), 10u);
}

TEST(RatioHistogram, TanhRatiosRespectJacobianNorm) {
  const auto walks = random_walks(4, 100, 2, 0.05, 15);
  const Matrix a = Matrix::Identity(4, 4) + 0.3 * CounterRng(1).normal_matrix(4, 4);
  const auto e = encoders::smooth_bijection("t", 0.5 * a, Vector::Zero(4));
  const auto latents = encode_each(e, walks);
  const auto ratios = smoothness_ratios(latents, walks);
  std::size_t i = 0;
  for (const auto& w : walks) {
    for (std::size_t n = 0; n + 1 < w.size(); ++n, ++i) {
      const Vector x0 = w.states[n].stacked();
      const Vector x1 = w.states[n + 1].stacked();
      double sup = 0.0;
      for (int s = 0; s <= 10; ++s) {
        const Vector x = x0 + (x1 - x0) * (s / 10.0);
        sup = std::max(sup, Eigen::JacobiSVD<Matrix>(encoders::jacobian(e, x)).singularValues()(0));
      }
      EXPECT_LE(ratios[i], sup * (1.0 + 1e-3));
    }
  }
}

TEST(RatioHistogram, StaticStatesAreDegenerate) {
  lagsim::Trajectory t;
  for (int n = 0; n < 5; ++n) t.states.push_back({Vector::Zero(1), Vector::Zero(1)});
  LatentTrajectory lt;
  lt.latents = Matrix::Zero(5, 2);
  try {
    smoothness_ratio_histogram({lt}, {t});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

// --- regression probe ------------------------------------------------------------

PairedSamples gaussian_pairs(const encoders::EncoderSpec& e, Index rows, std::uint64_t seed) {
  const Matrix z0 = CounterRng(seed).normal_matrix(rows, 4);
  Matrix z(rows, e.output_dim);
  for (Index r = 0; r < rows; ++r) z.row(r) = encoders::encode(e, Vector(z0.row(r).transpose())).transpose();
  return {z, z0};
}

TEST(RegressionProbe, IdentityIsLearnable) {
  const auto r = regression_probe(gaussian_pairs(encoders::identity("i", 4), 3000, 1), {}, 0);
  EXPECT_LT(r.validation_error, 0.01);
  EXPECT_EQ(r.validation_rows, 900);
}

TEST(RegressionProbe, IndependentLatentGivesUnitError) {
  const PairedSamples p{CounterRng(2).normal_matrix(3000, 4), CounterRng(3).normal_matrix(3000, 4)};
  EXPECT_NEAR(regression_probe(p, {}, 0).validation_error, 1.0, 0.15);
}

TEST(RegressionProbe, FoldingLosesOnlyTheFoldedCoordinate) {
  const auto id = regression_probe(gaussian_pairs(encoders::identity("i", 4), 3000, 4), {}, 0);
  const auto fold = regression_probe(gaussian_pairs(encoders::folding("f", 4, {0}), 3000, 4), {}, 0);
  EXPECT_GT(fold.validation_error, id.validation_error);
  EXPECT_LT(fold.validation_error, 0.9);
  Index worst = 0;
  fold.coordinate_errors.maxCoeff(&worst);
  EXPECT_EQ(worst, 0);
}

TEST(RegressionProbe, NeedsEnoughRows) {
  const PairedSamples p{Matrix::Zero(100, 2), Matrix::Zero(100, 2)};
  EXPECT_THROW(regression_probe(p, {}, 0), Error);
}

}  // namespace
}  // namespace repmeter
