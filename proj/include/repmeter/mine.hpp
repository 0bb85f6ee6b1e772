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

// Neural mutual information estimation with the Donsker-Varadhan bound
//
//   I(z; z0) >= E_joint[T] - log E_marginal[exp T]
//
// The statistics network T is trained by Adam. The gradient of the log term
// is replaced by grad E[exp T] / ma, where ma is an exponential moving
// average of E[exp T] over minibatches, which removes the minibatch bias of
// the naive gradient.

#ifndef REPMETER_MINE_HPP_
#define REPMETER_MINE_HPP_

#include <cstdint>
#include <vector>

#include "repmeter/common.hpp"
#include "repmeter/nn.hpp"
#include "repmeter/random.hpp"

namespace repmeter {

/// Two aligned sample matrices: row n of `latent` and of `state` belong to
/// the same time index.
struct PairedSamples {
  Matrix latent;  // [S x d_z]
  Matrix state;   // [S x 2k]

  Index size() const { return latent.rows(); }

  void validate(Index min_rows) const {
    require_arg(latent.rows() == state.rows(), "paired samples must have equal row counts");
    require_arg(latent.cols() >= 1 && state.cols() >= 1, "paired samples need at least one column each");
    require_arg(latent.rows() >= min_rows,
                "need at least " + std::to_string(min_rows) + " paired samples, got " +
                    std::to_string(latent.rows()));
    require_arg(latent.allFinite() && state.allFinite(), "paired samples contain non-finite values");
  }

  PairedSamples swapped() const { return {state, latent}; }
};

struct MineConfig {
  Index hidden_width = 64;
  double learning_rate = 5e-5;
  Index batch_size = 128;
  double moving_average = 0.001;
  Index steps = 20000;
  double eval_fraction = 0.1;
  bool standardize = true;

  void validate() const {
    require_arg(hidden_width > 0 && batch_size > 0 && steps > 0, "MINE sizes must be positive");
    require_arg(learning_rate > 0.0, "MINE learning rate must be positive");
    require_arg(moving_average > 0.0 && moving_average < 1.0, "moving-average constant must lie in (0,1)");
    require_arg(eval_fraction > 0.0 && eval_fraction <= 1.0, "evaluation fraction must lie in (0,1]");
  }

  Index eval_steps() const {
    return std::max<Index>(1, static_cast<Index>(std::llround(eval_fraction * static_cast<double>(steps))));
  }
};

struct MineResult {
  double estimate = 0.0;      // nats, mean over the evaluation window
  double window_stddev = 0.0; // spread of the minibatch values inside the window
  std::vector<double> trace;  // minibatch DV value per step
  bool negative = false;      // reported as-is, never clamped
};

namespace detail {

inline double log_mean_exp(const Eigen::Ref<const Vector>& t) {
  const double hi = t.maxCoeff();
  return hi + std::log((t.array() - hi).exp().mean());
}

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

}  // namespace detail

inline MineResult mine_mi(const PairedSamples& samples, const MineConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  samples.validate(std::max<Index>(2 * cfg.batch_size, 2));

  const Matrix z = cfg.standardize ? nn::Standardizer::fit(samples.latent).apply(samples.latent) : samples.latent;
  const Matrix s = cfg.standardize ? nn::Standardizer::fit(samples.state).apply(samples.state) : samples.state;
  const Index n = z.rows();
  const Index dz = z.cols();
  const Index ds = s.cols();
  const Index batch = cfg.batch_size;

  CounterRng rng(seed);
  const std::vector<Index> sizes{dz + ds, cfg.hidden_width, cfg.hidden_width, 1};
  nn::Network net = nn::init_network(sizes, rng());
  nn::AdamState adam = nn::AdamState::for_network(net, cfg.learning_rate);

  Matrix joint(batch, dz + ds);
  Matrix marginal(batch, dz + ds);
  nn::ForwardCache joint_cache;
  nn::ForwardCache marginal_cache;
  const Matrix joint_grad = Matrix::Constant(batch, 1, -1.0);
  Matrix marginal_grad(batch, 1);

  MineResult result;
  result.trace.reserve(static_cast<std::size_t>(cfg.steps));
  double log_ma = kNegInf;
  const double log_keep = std::log1p(-cfg.moving_average);
  const double log_rate = std::log(cfg.moving_average);

  for (Index step = 0; step < cfg.steps; ++step) {
    for (Index b = 0; b < batch; ++b) {
      const auto i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      joint.row(b) << z.row(i), s.row(i);
      const auto iz = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      const auto is = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      marginal.row(b) << z.row(iz), s.row(is);
    }
    const Vector t_joint = nn::forward(net, joint, &joint_cache).col(0);
    const Vector t_marg = nn::forward(net, marginal, &marginal_cache).col(0);
    const double lme = detail::log_mean_exp(t_marg);
    const double dv = t_joint.mean() - lme;
    require(std::isfinite(dv), ErrorKind::kNumericFailure,
            "MINE objective is not finite at step " + std::to_string(step));
    result.trace.push_back(dv);

    log_ma = (step == 0) ? lme : detail::log_add_exp(log_keep + log_ma, log_rate + lme);
    marginal_grad.col(0) = (t_marg.array() - log_ma).exp().matrix();

    // loss = -mean(T_joint) + mean(exp T_marg) / ma
    nn::Gradients grads = nn::backward(net, joint_cache, joint_grad);
    grads += nn::backward(net, marginal_cache, marginal_grad);
    try {
      nn::adam_step(net, grads, adam);
    } catch (const Error&) {
      throw Error(ErrorKind::kNumericFailure, "MINE gradient is not finite at step " + std::to_string(step));
    }
  }

  const Index window = cfg.eval_steps();
  const auto begin = result.trace.end() - window;
  double sum = 0.0;
  for (auto it = begin; it != result.trace.end(); ++it) sum += *it;
  result.estimate = sum / static_cast<double>(window);
  double ss = 0.0;
  for (auto it = begin; it != result.trace.end(); ++it) ss += (*it - result.estimate) * (*it - result.estimate);
  result.window_stddev = window > 1 ? std::sqrt(ss / static_cast<double>(window - 1)) : 0.0;
  result.negative = result.estimate < 0.0;
  return result;
}

}  // namespace repmeter

#endif  // REPMETER_MINE_HPP_
