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

// Discrete-time simulation of Lagrangian systems
//
//   M(q) qdd + C(q, qd) = B(q) tau
//
// in reduced (constraint-eliminated) coordinates, integrated with explicit
// Euler at sample time Ts, plus moment statistics of the first and second
// temporal differences of the true state z0 = [q, qd].

#ifndef REPMETER_LAGSIM_HPP_
#define REPMETER_LAGSIM_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "repmeter/common.hpp"
#include "repmeter/random.hpp"

namespace repmeter::lagsim {

struct SystemSpec {
  std::string name;
  Index dof = 0;     // k, dimension of q
  Index inputs = 0;  // m, dimension of tau
  std::function<Matrix(const Vector& q)> inertia;                     // M(q), [k x k]
  std::function<Vector(const Vector& q, const Vector& qd)> bias;      // C(q, qd), [k]
  std::function<Matrix(const Vector& q)> input_map;                   // B(q), [k x m]
  double sample_time = 0.05;
  Vector q0_mean;
  Matrix q0_cov;
  bool compensate_bias = false;

  Index state_dim() const { return 2 * dof; }

  void validate() const {
    require_arg(dof > 0 && inputs > 0, "system dimensions must be positive");
    require_arg(sample_time > 0.0, "sample time must be positive");
    require_arg(static_cast<bool>(inertia) && static_cast<bool>(bias) && static_cast<bool>(input_map),
                "system functions must be set");
    require_arg(q0_mean.size() == dof, "q0 mean has wrong dimension");
    require_arg(q0_cov.rows() == dof && q0_cov.cols() == dof, "q0 covariance has wrong shape");
  }
};

struct State {
  Vector q;
  Vector qd;

  Vector stacked() const {
    Vector z(q.size() + qd.size());
    z << q, qd;
    return z;
  }
};

struct Trajectory {
  std::vector<State> states;   // z0_0 .. z0_N
  std::vector<Vector> torques; // tau_0 .. tau_{N-1}
  double sample_time = 0.0;
  std::uint64_t seed = 0;
  std::string system;
  std::string policy;

  std::size_t size() const { return states.size(); }

  bool valid() const { return !states.empty() && torques.size() + 1 == states.size(); }

  /// States stacked as rows [N+1 x 2k].
  Matrix state_matrix() const {
    require_arg(!states.empty(), "empty trajectory");
    const Index d = states.front().q.size() * 2;
    Matrix out(static_cast<Index>(states.size()), d);
    for (std::size_t n = 0; n < states.size(); ++n) out.row(static_cast<Index>(n)) = states[n].stacked().transpose();
    return out;
  }
};

struct ExplorationPolicy {
  std::string name = "random";
  std::function<Vector(std::size_t n)> mean;       // pi_n
  std::function<Matrix(std::size_t n)> covariance; // Sigma_n
  std::optional<Matrix> feedback_gain;             // [m x 2k], adds K z0_n to pi_n

  static ExplorationPolicy constant(const Vector& mean, const Matrix& cov, std::string name = "constant") {
    ExplorationPolicy p;
    p.name = std::move(name);
    p.mean = [mean](std::size_t) { return mean; };
    p.covariance = [cov](std::size_t) { return cov; };
    return p;
  }

  /// Zero-mean isotropic exploration, tau ~ N(0, sigma^2 I).
  static ExplorationPolicy random(Index inputs, double sigma) {
    return constant(Vector::Zero(inputs), sigma * sigma * Matrix::Identity(inputs, inputs), "random");
  }
};

/// q+ = q + Ts qd,  qd+ = qd + Ts M(q)^-1 (-C(q, qd) + B(q) tau).
/// With `compensate_bias` the controller cancels C and the term is dropped.
inline State euler_step(const State& state, const Vector& tau, const SystemSpec& spec) {
  require_arg(state.q.size() == spec.dof && state.qd.size() == spec.dof, "state dimension does not match system");
  require_arg(tau.size() == spec.inputs, "torque dimension does not match system");
  const Matrix m = spec.inertia(state.q);
  require(m.rows() == spec.dof && m.cols() == spec.dof, ErrorKind::kInvalidArgument, "inertia has wrong shape");
  Eigen::LLT<Matrix> llt(m);
  require(llt.info() == Eigen::Success && m.isApprox(m.transpose(), 1e-12), ErrorKind::kNumericFailure,
          "inertia matrix is not symmetric positive-definite");
  Vector force = spec.input_map(state.q) * tau;
  if (!spec.compensate_bias) force -= spec.bias(state.q, state.qd);
  State next;
  next.q = state.q + spec.sample_time * state.qd;
  next.qd = state.qd + spec.sample_time * llt.solve(force);
  return next;
}

/// Effective discrete input map  Ts M(q)^-1 B(q).
inline Matrix tilde_b(const SystemSpec& spec, const Vector& q) {
  require_arg(q.size() == spec.dof, "configuration dimension does not match system");
  const Matrix m = spec.inertia(q);
  Eigen::LLT<Matrix> llt(m);
  require(llt.info() == Eigen::Success, ErrorKind::kNumericFailure, "inertia matrix is singular");
  return spec.sample_time * llt.solve(spec.input_map(q));
}

inline constexpr double kDivergenceLimit = 1e9;

/// Rollout of N transitions (N+1 states) from q0 ~ p(q0), qd0 = 0.
inline Trajectory rollout(const SystemSpec& spec, const ExplorationPolicy& policy, std::size_t steps,
                          std::uint64_t seed) {
  spec.validate();
  require_arg(steps >= 2, "rollout needs at least two steps");
  require_arg(static_cast<bool>(policy.mean) && static_cast<bool>(policy.covariance), "policy schedules must be set");
  if (policy.feedback_gain) {
    require_arg(policy.feedback_gain->rows() == spec.inputs && policy.feedback_gain->cols() == spec.state_dim(),
                "feedback gain must be [m x 2k]");
  }
  CounterRng rng(seed);
  Trajectory traj;
  traj.sample_time = spec.sample_time;
  traj.seed = seed;
  traj.system = spec.name;
  traj.policy = policy.name;
  traj.states.reserve(steps + 1);
  traj.torques.reserve(steps);

  const Matrix q0_factor = psd_factor(spec.q0_cov, "q0 covariance");
  State state{spec.q0_mean + q0_factor * rng.normal_vector(spec.dof), Vector::Zero(spec.dof)};
  traj.states.push_back(state);

  for (std::size_t n = 0; n < steps; ++n) {
    Vector mean = policy.mean(n);
    require_arg(mean.size() == spec.inputs, "policy mean has wrong dimension");
    if (policy.feedback_gain) mean += *policy.feedback_gain * state.stacked();
    const Matrix factor = psd_factor(policy.covariance(n), "policy covariance");
    require_arg(factor.rows() == spec.inputs, "policy covariance has wrong dimension");
    Vector tau = mean + factor * rng.normal_vector(spec.inputs);
    state = euler_step(state, tau, spec);
    const bool blown = !state.q.allFinite() || !state.qd.allFinite() ||
                       state.q.cwiseAbs().maxCoeff() > kDivergenceLimit ||
                       state.qd.cwiseAbs().maxCoeff() > kDivergenceLimit;
    if (blown) throw Error(ErrorKind::kDiverged, "rollout diverged at step " + std::to_string(n + 1));
    traj.torques.push_back(std::move(tau));
    traj.states.push_back(state);
  }
  return traj;
}

// Built-in systems ----------------------------------------------------------

/// k independent unit masses: M = I, C = 0, B = I.
inline SystemSpec double_integrator(Index dof, double sample_time) {
  require_arg(dof > 0, "double integrator needs at least one degree of freedom");
  SystemSpec s;
  s.name = "double_integrator";
  s.dof = dof;
  s.inputs = dof;
  s.inertia = [dof](const Vector&) { return Matrix(Matrix::Identity(dof, dof)); };
  s.bias = [dof](const Vector&, const Vector&) { return Vector(Vector::Zero(dof)); };
  s.input_map = [dof](const Vector&) { return Matrix(Matrix::Identity(dof, dof)); };
  s.sample_time = sample_time;
  s.q0_mean = Vector::Zero(dof);
  s.q0_cov = Matrix::Zero(dof, dof);
  return s;
}

struct PendulumParams {
  double mass = 1.0;
  double length = 1.0;
  double gravity = 9.81;
};

/// Planar pendulum, q measured from the downward vertical.
/// M = m l^2, C = m g l sin q, B = 1.
inline SystemSpec pendulum(const PendulumParams& p, double sample_time) {
  require_arg(p.mass > 0.0 && p.length > 0.0, "pendulum mass and length must be positive");
  SystemSpec s;
  s.name = "pendulum";
  s.dof = 1;
  s.inputs = 1;
  const double inertia = p.mass * p.length * p.length;
  const double mgl = p.mass * p.gravity * p.length;
  s.inertia = [inertia](const Vector&) { return Matrix(Matrix::Constant(1, 1, inertia)); };
  s.bias = [mgl](const Vector& q, const Vector&) { return Vector(Vector::Constant(1, mgl * std::sin(q(0)))); };
  s.input_map = [](const Vector&) { return Matrix(Matrix::Ones(1, 1)); };
  s.sample_time = sample_time;
  s.q0_mean = Vector::Zero(1);
  s.q0_cov = Matrix::Zero(1, 1);
  return s;
}

struct TwoLinkParams {
  double m1 = 1.0, m2 = 1.0;
  double l1 = 1.0, l2 = 1.0;
  double lc1 = 0.5, lc2 = 0.5;  // distance from joint to link centre of mass
  double i1 = 1.0 / 12.0, i2 = 1.0 / 12.0;
  double gravity = 9.81;
};

/// Planar two-link arm with point joints, closed-form M and C (Spong's form).
inline SystemSpec two_link_arm(const TwoLinkParams& p, double sample_time) {
  SystemSpec s;
  s.name = "two_link_arm";
  s.dof = 2;
  s.inputs = 2;
  s.inertia = [p](const Vector& q) {
    const double c2 = std::cos(q(1));
    const double a = p.m1 * p.lc1 * p.lc1 + p.i1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * c2) + p.i2;
    const double b = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2) + p.i2;
    const double d = p.m2 * p.lc2 * p.lc2 + p.i2;
    Matrix m(2, 2);
    m << a, b, b, d;
    return m;
  };
  s.bias = [p](const Vector& q, const Vector& qd) {
    const double h = p.m2 * p.l1 * p.lc2 * std::sin(q(1));
    const double g1 = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * std::cos(q(0)) +
                      p.m2 * p.lc2 * p.gravity * std::cos(q(0) + q(1));
    const double g2 = p.m2 * p.lc2 * p.gravity * std::cos(q(0) + q(1));
    Vector c(2);
    c << -h * qd(1) * qd(1) - 2.0 * h * qd(0) * qd(1) + g1, h * qd(0) * qd(0) + g2;
    return c;
  };
  s.input_map = [](const Vector&) { return Matrix(Matrix::Identity(2, 2)); };
  s.sample_time = sample_time;
  s.q0_mean = Vector::Zero(2);
  s.q0_cov = Matrix::Zero(2, 2);
  return s;
}

// Difference statistics -----------------------------------------------------

struct MomentStats {
  Vector mean;
  Matrix covariance;  // unbiased sample covariance
  Index samples = 0;
};

inline MomentStats sample_moments(const Matrix& rows) {
  require_arg(rows.rows() >= 2, "need at least two samples for moments");
  MomentStats out;
  out.samples = rows.rows();
  out.mean = rows.colwise().mean().transpose();
  const Matrix centered = rows.rowwise() - out.mean.transpose();
  out.covariance = centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
  return out;
}

/// delta1 = z0_{n+1} - z0_n across trajectories.
inline MomentStats first_difference_stats(const std::vector<Trajectory>& trajs, std::size_t n) {
  require_arg(trajs.size() >= 2, "need at least two trajectories");
  const Index d = trajs.front().states.front().q.size() * 2;
  Matrix rows(static_cast<Index>(trajs.size()), d);
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    require_arg(trajs[t].size() > n + 1, "trajectory too short for difference index " + std::to_string(n));
    rows.row(static_cast<Index>(t)) = (trajs[t].states[n + 1].stacked() - trajs[t].states[n].stacked()).transpose();
  }
  return sample_moments(rows);
}

/// delta2 = z0_{n+1} - 2 z0_n + z0_{n-1} across trajectories.
inline MomentStats second_difference_stats(const std::vector<Trajectory>& trajs, std::size_t n) {
  require_arg(trajs.size() >= 2, "need at least two trajectories");
  require_arg(n >= 1, "second difference needs n >= 1");
  const Index d = trajs.front().states.front().q.size() * 2;
  Matrix rows(static_cast<Index>(trajs.size()), d);
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    require_arg(trajs[t].size() > n + 1, "trajectory too short for difference index " + std::to_string(n));
    rows.row(static_cast<Index>(t)) = (trajs[t].states[n + 1].stacked() - 2.0 * trajs[t].states[n].stacked() +
                                       trajs[t].states[n - 1].stacked())
                                          .transpose();
  }
  return sample_moments(rows);
}

/// Mean Frobenius norm of tilde_B(q_n) - tilde_B(q_{n-1}) over trajectories;
/// quantifies how well the slowly-varying input map assumption holds.
inline double tilde_b_drift(const SystemSpec& spec, const std::vector<Trajectory>& trajs, std::size_t n) {
  require_arg(!trajs.empty() && n >= 1, "drift needs trajectories and n >= 1");
  double sum = 0.0;
  for (const auto& t : trajs) {
    require_arg(t.size() > n, "trajectory too short for drift index");
    sum += (tilde_b(spec, t.states[n].q) - tilde_b(spec, t.states[n - 1].q)).norm();
  }
  return sum / static_cast<double>(trajs.size());
}

struct CoordinateMoments {
  std::optional<double> skewness;
  std::optional<double> excess_kurtosis;
  bool degenerate = false;
};

/// Standardized third and fourth moments per column.
inline std::vector<CoordinateMoments> normality_diagnostic(const Matrix& samples) {
  require_arg(samples.rows() >= 100, "normality diagnostic needs at least 100 samples");
  std::vector<CoordinateMoments> out(static_cast<std::size_t>(samples.cols()));
  const double s = static_cast<double>(samples.rows());
  for (Index j = 0; j < samples.cols(); ++j) {
    const auto col = samples.col(j).array();
    const double mean = col.mean();
    const Eigen::ArrayXd c = col - mean;
    const double m2 = c.square().sum() / s;
    auto& r = out[static_cast<std::size_t>(j)];
    if (!(m2 > 1e-300) || !(m2 > 1e-24 * mean * mean)) {
      r.degenerate = true;
      continue;
    }
    r.skewness = (c.cube().sum() / s) / std::pow(m2, 1.5);
    r.excess_kurtosis = (c.square().square().sum() / s) / (m2 * m2) - 3.0;
  }
  return out;
}

}  // namespace repmeter::lagsim

#endif  // REPMETER_LAGSIM_HPP_
