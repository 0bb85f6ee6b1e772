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

#ifndef REPMETER_PROBE_HPP_
#define REPMETER_PROBE_HPP_

#include <cstdint>
#include <vector>

#include "repmeter/common.hpp"
#include "repmeter/mine.hpp"
#include "repmeter/nn.hpp"
#include "repmeter/random.hpp"

namespace repmeter {

struct ProbeConfig {
  Index hidden_width = 64;
  double learning_rate = 1e-3;
  Index batch_size = 128;
  Index steps = 4000;
  double holdout = 0.3;

  void validate() const {
    require_arg(hidden_width > 0 && batch_size > 0 && steps > 0, "probe sizes must be positive");
    require_arg(learning_rate > 0.0, "probe learning rate must be positive");
    require_arg(holdout > 0.0 && holdout < 1.0, "holdout fraction must lie in (0,1)");
  }
};

struct ProbeResult {
  double validation_error = 0.0;       // mean over true-state coordinates
  Vector coordinate_errors;            // held-out MSE per true-state coordinate
  std::vector<double> train_loss;      // minibatch loss per step
  Index train_rows = 0;
  Index validation_rows = 0;
};

/// Fits z0 ~ f(z) with an MLP [d_z -> h -> h -> 2k] under L2 loss and reports
/// the held-out mean squared error. Inputs and targets are standardized with
/// training-split statistics, so errors are in units of target variance: 0
/// for a perfect fit, about 1 when z carries no information about z0.
inline ProbeResult regression_probe(const PairedSamples& samples, const ProbeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  samples.validate(500);
  const Index n = samples.size();
  CounterRng rng(seed);
  const auto perm = rng.permutation(n);
  const Index n_val = static_cast<Index>(std::llround(cfg.holdout * static_cast<double>(n)));
  const Index n_train = n - n_val;

  auto gather = [&](const Matrix& src, Index begin, Index count) {
    Matrix out(count, src.cols());
    for (Index i = 0; i < count; ++i) out.row(i) = src.row(perm[static_cast<std::size_t>(begin + i)]);
    return out;
  };
  const Matrix x_train_raw = gather(samples.latent, 0, n_train);
  const Matrix y_train_raw = gather(samples.state, 0, n_train);
  const auto x_std = nn::Standardizer::fit(x_train_raw);
  const auto y_std = nn::Standardizer::fit(y_train_raw);
  const Matrix x_train = x_std.apply(x_train_raw);
  const Matrix y_train = y_std.apply(y_train_raw);
  const Matrix x_val = x_std.apply(gather(samples.latent, n_train, n_val));
  const Matrix y_val = y_std.apply(gather(samples.state, n_train, n_val));

  const Index d_out = y_train.cols();
  const std::vector<Index> sizes{x_train.cols(), cfg.hidden_width, cfg.hidden_width, d_out};
  nn::Network net = nn::init_network(sizes, rng());
  nn::AdamState adam = nn::AdamState::for_network(net, cfg.learning_rate);

  ProbeResult result;
  result.train_rows = n_train;
  result.validation_rows = n_val;
  result.train_loss.reserve(static_cast<std::size_t>(cfg.steps));

  const Index batch = std::min(cfg.batch_size, n_train);
  std::vector<Index> order = rng.permutation(n_train);
  Index cursor = 0;
  Matrix xb(batch, x_train.cols());
  Matrix yb(batch, d_out);
  nn::ForwardCache cache;
  for (Index step = 0; step < cfg.steps; ++step) {
    for (Index b = 0; b < batch; ++b) {
      if (cursor == n_train) {
        order = rng.permutation(n_train);
        cursor = 0;
      }
      const Index row = order[static_cast<std::size_t>(cursor++)];
      xb.row(b) = x_train.row(row);
      yb.row(b) = y_train.row(row);
    }
    const Matrix residual = nn::forward(net, xb, &cache) - yb;
    const double loss = residual.squaredNorm() / static_cast<double>(batch * d_out);
    require(std::isfinite(loss), ErrorKind::kNumericFailure,
            "regression probe diverged at step " + std::to_string(step));
    result.train_loss.push_back(loss);
    const nn::Gradients grads = nn::backward(net, cache, (2.0 / static_cast<double>(d_out)) * residual);
    nn::adam_step(net, grads, adam);
  }

  const Matrix err = nn::forward(net, x_val) - y_val;
  result.coordinate_errors = (err.cwiseAbs2().colwise().sum() / static_cast<double>(n_val)).transpose();
  result.validation_error = result.coordinate_errors.mean();
  require(std::isfinite(result.validation_error), ErrorKind::kNumericFailure, "regression probe produced non-finite error");
  return result;
}

}  // namespace repmeter

#endif  // REPMETER_PROBE_HPP_
