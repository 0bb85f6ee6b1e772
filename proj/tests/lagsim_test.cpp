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
#include <numbers>
#include <vector>

#include "repmeter/lagsim.hpp"

namespace repmeter::lagsim {
namespace {

State make_state(double q, double qd) { return State{Vector::Constant(1, q), Vector::Constant(1, qd)}; }

std::vector<Trajectory> rollouts(const SystemSpec& spec, const ExplorationPolicy& policy, int count, std::size_t steps,
                                 std::uint64_t base) {
  std::vector<Trajectory> out;
  for (int r = 0; r < count; ++r) out.push_back(rollout(spec, policy, steps, derive_seed(base, static_cast<std::uint64_t>(r))));
  return out;
}

TEST(EulerStep, ForceFreeMotion) {
  const auto spec = double_integrator(1, 0.05);
  const State next = euler_step(make_state(0.0, 1.0), Vector::Zero(1), spec);
  EXPECT_DOUBLE_EQ(next.q(0), 0.05);
  EXPECT_DOUBLE_EQ(next.qd(0), 1.0);
}

TEST(EulerStep, OneStepImpulse) {
  const auto spec = double_integrator(1, 0.05);
  const State next = euler_step(make_state(0.0, 0.0), Vector::Constant(1, 2.0), spec);
  EXPECT_DOUBLE_EQ(next.q(0), 0.0);
  EXPECT_DOUBLE_EQ(next.qd(0), 0.1);
}

TEST(EulerStep, PendulumAgreesWithFineStepOracle) {
  const PendulumParams p{0.8, 1.3, 9.81};
  const double ts = 0.05;
  const auto spec = pendulum(p, ts);
  for (double q0 : {-2.0, -0.4, 0.3, 1.1, 2.7}) {
    const double qd0 = 0.5 * q0;
    const double tau = 0.7;
    const State coarse = euler_step(make_state(q0, qd0), Vector::Constant(1, tau), spec);
    double q = q0, qd = qd0;
    const double h = ts / 100.0;
    for (int i = 0; i < 100; ++i) {
      const double acc = (tau - p.mass * p.gravity * p.length * std::sin(q)) / (p.mass * p.length * p.length);
      q += h * qd;
      qd += h * acc;
    }
    // one explicit step carries local error (Ts^2 / 2) * max |second derivative|
    const double qdd_max = (std::abs(tau) + p.mass * p.gravity * p.length) / (p.mass * p.length * p.length);
    const double bound = ts * ts * (qdd_max + std::abs(qd0) * p.gravity / p.length + 1.0);
    EXPECT_LT(std::abs(coarse.q(0) - q), bound);
    EXPECT_LT(std::abs(coarse.qd(0) - qd), bound);
  }
}

TEST(EulerStep, NonPositiveInertiaIsNumericFailure) {
  auto spec = double_integrator(2, 0.05);
  spec.inertia = [](const Vector&) { return Matrix(Matrix::Zero(2, 2)); };
  try {
    euler_step(State{Vector::Zero(2), Vector::Zero(2)}, Vector::Zero(2), spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumericFailure);
  }
}

TEST(Rollout, ZeroPolicyFromRestStaysPut) {
  const auto spec = double_integrator(2, 0.05);
  const auto traj = rollout(spec, ExplorationPolicy::random(2, 0.0), 10, 3);
  ASSERT_EQ(traj.size(), 11u);
  ASSERT_EQ(traj.torques.size(), 10u);
  for (const auto& s : traj.states) EXPECT_TRUE(s.stacked() == traj.states.front().stacked());
}

TEST(Rollout, SameSeedSameTrajectory) {
  auto spec = two_link_arm({}, 0.01);
  spec.q0_cov = 0.1 * Matrix::Identity(2, 2);
  const auto policy = ExplorationPolicy::random(2, 1.0);
  const auto a = rollout(spec, policy, 50, 9);
  const auto b = rollout(spec, policy, 50, 9);
  const auto c = rollout(spec, policy, 50, 10);
  EXPECT_TRUE(a.state_matrix() == b.state_matrix());
  EXPECT_FALSE(a.state_matrix() == c.state_matrix());
}

TEST(Rollout, FirstVelocityVarianceMatchesClosedForm) {
  const double ts = 0.05, sigma = 2.0;
  const auto trajs = rollouts(double_integrator(1, ts), ExplorationPolicy::random(1, sigma), 1000, 2, 17);
  double ss = 0.0;
  for (const auto& t : trajs) ss += t.states[1].qd(0) * t.states[1].qd(0);
  const double var = ss / 1000.0;
  EXPECT_NEAR(var / (ts * ts * sigma * sigma), 1.0, 0.1);
}

TEST(Rollout, DivergenceNamesTheStep) {
  const auto spec = double_integrator(1, 0.05);
  const auto policy = ExplorationPolicy::constant(Vector::Constant(1, 1e12), Matrix::Zero(1, 1));
  try {
    rollout(spec, policy, 5, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDiverged);
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(Rollout, RejectsShortHorizon) { EXPECT_THROW(rollout(double_integrator(1, 0.1), ExplorationPolicy::random(1, 1), 1, 0), Error); }

TEST(TildeB, UnitMass) {
  const Matrix b = tilde_b(double_integrator(3, 0.05), Vector::Zero(3));
  EXPECT_TRUE(b.isApprox(0.05 * Matrix::Identity(3, 3), 1e-15));
}

TEST(TildeB, DoubleMass) {
  auto spec = double_integrator(2, 0.05);
  spec.inertia = [](const Vector&) { return Matrix(2.0 * Matrix::Identity(2, 2)); };
  EXPECT_TRUE(tilde_b(spec, Vector::Zero(2)).isApprox(0.025 * Matrix::Identity(2, 2), 1e-15));
}

TEST(TildeB, PendulumHandFormula) {
  const PendulumParams p{0.5, 2.0, 9.81};
  const auto spec = pendulum(p, 0.05);
  EXPECT_NEAR(tilde_b(spec, Vector::Constant(1, std::numbers::pi / 4))(0, 0), 0.05 / (0.5 * 4.0), 1e-15);
}

TEST(DifferenceStats, ZeroNoiseHasZeroMoments) {
  const auto trajs = rollouts(double_integrator(2, 0.05), ExplorationPolicy::random(2, 0.0), 5, 10, 1);
  const auto s = first_difference_stats(trajs, 4);
  EXPECT_EQ(s.mean.norm(), 0.0);
  EXPECT_EQ(s.covariance.norm(), 0.0);
}

TEST(DifferenceStats, VelocityBlockMatchesInputMap) {
  const auto spec = double_integrator(2, 0.05);
  const auto trajs = rollouts(spec, ExplorationPolicy::random(2, 1.0), 2000, 10, 5);
  const auto s = first_difference_stats(trajs, 6);
  const Matrix bt = tilde_b(spec, Vector::Zero(2));
  const Matrix expected = bt * bt.transpose();
  const Matrix block = s.covariance.bottomRightCorner(2, 2);
  EXPECT_LT((block - expected).norm() / expected.norm(), 0.1);
}

TEST(DifferenceStats, PositionBlockAccumulates) {
  const double ts = 0.05;
  const auto spec = double_integrator(2, ts);
  const auto trajs = rollouts(spec, ExplorationPolicy::random(2, 1.0), 2000, 12, 6);
  const std::size_t n = 10;
  const auto s = first_difference_stats(trajs, n);
  // q_{n+1} - q_n = Ts qd_n and qd_n sums n independent kicks B tau_i
  const Matrix bt = tilde_b(spec, Vector::Zero(2));
  const Matrix expected = static_cast<double>(n) * ts * ts * bt * bt.transpose();
  const Matrix block = s.covariance.topLeftCorner(2, 2);
  EXPECT_LT((block - expected).norm() / expected.norm(), 0.1);
}

TEST(DifferenceStats, ConstantVelocityHasZeroSecondDifference) {
  const auto spec = double_integrator(1, 0.0625);
  Trajectory a, b;
  for (Trajectory* t : {&a, &b}) {
    State s = make_state(0.0, t == &a ? 1.0 : 2.0);
    t->states.push_back(s);
    for (int n = 0; n < 6; ++n) {
      s = euler_step(s, Vector::Zero(1), spec);
      t->torques.push_back(Vector::Zero(1));
      t->states.push_back(s);
    }
  }
  const auto s = second_difference_stats({a, b}, 3);
  EXPECT_EQ(s.mean(0), 0.0);
  EXPECT_EQ(s.covariance(0, 0), 0.0);
}

TEST(DifferenceStats, SecondDifferenceMeanIsOneKick) {
  const double ts = 0.05;
  const auto spec = double_integrator(2, ts);
  Vector pi(2);
  pi << 1.5, -0.5;
  const auto policy = ExplorationPolicy::constant(pi, Matrix::Identity(2, 2));
  const auto trajs = rollouts(spec, policy, 2000, 12, 8);
  const auto s = second_difference_stats(trajs, 8);
  const double se = std::sqrt(s.covariance.topLeftCorner(2, 2).trace() / static_cast<double>(s.samples));
  EXPECT_LE(s.mean.head(2).norm(), ts * (tilde_b(spec, Vector::Zero(2)) * pi).norm() + 3.0 * se);
}

TEST(DifferenceStats, BiasedPolicySecondDifferenceBiasIsSmaller) {
  const auto spec = double_integrator(2, 0.05);
  const auto policy = ExplorationPolicy::constant(Vector::Ones(2), Matrix::Identity(2, 2));
  const auto trajs = rollouts(spec, policy, 2000, 20, 12);
  for (std::size_t n = 5; n < 19; ++n)
    EXPECT_LT(second_difference_stats(trajs, n).mean.head(2).norm(), first_difference_stats(trajs, n).mean.head(2).norm())
        << "n = " << n;
}

TEST(DifferenceStats, InputMapDriftVanishesForConstantInertia) {
  const auto spec = double_integrator(2, 0.05);
  const auto trajs = rollouts(spec, ExplorationPolicy::random(2, 1.0), 10, 10, 2);
  EXPECT_EQ(tilde_b_drift(spec, trajs, 5), 0.0);
  auto arm = two_link_arm({}, 0.01);
  arm.q0_cov = Matrix::Identity(2, 2);
  const auto arm_trajs = rollouts(arm, ExplorationPolicy::random(2, 5.0), 10, 10, 2);
  EXPECT_GT(tilde_b_drift(arm, arm_trajs, 5), 0.0);
}

TEST(NormalityDiagnostic, StandardNormal) {
  CounterRng rng(1);
  const auto d = normality_diagnostic(rng.normal_matrix(10000, 2));
  for (const auto& c : d) {
    ASSERT_TRUE(c.skewness && c.excess_kurtosis);
    EXPECT_LT(std::abs(*c.skewness), 0.1);
    EXPECT_LT(std::abs(*c.excess_kurtosis), 0.2);
  }
}

TEST(NormalityDiagnostic, UniformKurtosis) {
  CounterRng rng(2);
  Matrix u(20000, 1);
  for (Index i = 0; i < u.rows(); ++i) u(i, 0) = rng.uniform();
  const auto d = normality_diagnostic(u);
  EXPECT_NEAR(*d[0].excess_kurtosis, -1.2, 0.05);
}

TEST(NormalityDiagnostic, ConstantIsDegenerate) {
  Matrix c = Matrix::Constant(500, 2, 3.25);
  c.col(1) = CounterRng(3).normal_vector(500);
  const auto d = normality_diagnostic(c);
  EXPECT_TRUE(d[0].degenerate);
  EXPECT_FALSE(d[0].skewness.has_value());
  EXPECT_FALSE(d[1].degenerate);
}

TEST(NormalityDiagnostic, NeedsEnoughSamples) { EXPECT_THROW(normality_diagnostic(Matrix::Zero(50, 1)), Error); }

}  // namespace
}  // namespace repmeter::lagsim
