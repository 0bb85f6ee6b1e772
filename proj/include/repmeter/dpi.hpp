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

// Data-processing check for the neural MI estimator on z0 -> x -> z, where
// I(z; z0) <= I(z; x) must hold.

#ifndef REPMETER_DPI_HPP_
#define REPMETER_DPI_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "repmeter/gaussian.hpp"
#include "repmeter/mine.hpp"
#include "repmeter/stats.hpp"

namespace repmeter {

/// Scalar state observed through `x_dim` independently noisy copies and
/// encoded as their average plus noise.
inline GaussianChain replicated_chain(Index x_dim, double obs_noise, double enc_noise) {
  require_arg(x_dim >= 1, "observation dimension must be positive");
  GaussianChain c;
  c.observation = Matrix::Ones(x_dim, 1);
  c.obs_noise = obs_noise;
  c.encoder = Matrix::Constant(1, x_dim, 1.0 / static_cast<double>(x_dim));
  c.enc_noise = enc_noise;
  return c;
}

struct DpiOptions {
  double obs_noise = 1.0;
  double enc_noise = 1.0;
  Index samples = 20000;
  std::uint64_t data_seed = 2024;
  MineConfig mine;
};

struct DpiReport {
  double oracle_latent_state = 0.0;  // I(z; z0)
  double oracle_latent_obs = 0.0;    // I(z; x)
  std::vector<double> est_latent_state;
  std::vector<double> est_latent_obs;
  Summary latent_state;
  Summary latent_obs;

  /// I^(z; z0) <= I^(z; x) + 2 * spread, spread being the larger of the two
  /// across-seed standard deviations.
  bool ordering_holds() const {
    const double spread = std::max(latent_state.spread.value_or(0.0), latent_obs.spread.value_or(0.0));
    return latent_state.mean <= latent_obs.mean + 2.0 * spread;
  }

  bool within(double tolerance) const {
    return std::abs(latent_state.mean - oracle_latent_state) <= tolerance &&
           std::abs(latent_obs.mean - oracle_latent_obs) <= tolerance;
  }
};

inline DpiReport dpi_check(Index x_dim, std::span<const std::uint64_t> seeds, const DpiOptions& opt = {}) {
  require_arg(!seeds.empty(), "need at least one seed");
  const GaussianChain chain = replicated_chain(x_dim, opt.obs_noise, opt.enc_noise);
  DpiReport r;
  r.oracle_latent_state = chain.mi_latent_state();
  r.oracle_latent_obs = chain.mi_latent_obs();
  const auto draw = chain.sample(opt.samples, opt.data_seed);
  const PairedSamples with_state{draw.latent, draw.state};
  const PairedSamples with_obs{draw.latent, draw.obs};
  for (std::uint64_t s : seeds) {
    r.est_latent_state.push_back(mine_mi(with_state, opt.mine, s).estimate);
    r.est_latent_obs.push_back(mine_mi(with_obs, opt.mine, derive_seed(s, 1)).estimate);
  }
  r.latent_state = summarize(r.est_latent_state);
  r.latent_obs = summarize(r.est_latent_obs);
  return r;
}

}  // namespace repmeter

#endif  // REPMETER_DPI_HPP_
