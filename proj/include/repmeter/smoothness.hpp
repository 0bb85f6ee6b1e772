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

// Temporal smoothness of a representation.
//
// If true-state perturbations are N(0, alpha I) and dz ~= J dz0, then
// E||dz||^2 = alpha tr(J J^T), and the log-sum inequality over the squared
// eigenvalues of J gives
//
//   (d/2) (ln E||dz||^2 - ln(alpha d)) >= ln|det J|,
//
// with equality iff all eigenvalues have equal magnitude. Consecutive time
// steps supply the perturbations, so the left side is computable from latent
// trajectories alone. Subtracting it from the latent entropy gives the
// uniqueness score, which is bounded above by H(z0) and meets it for
// invertible pipelines.

#ifndef REPMETER_SMOOTHNESS_HPP_
#define REPMETER_SMOOTHNESS_HPP_

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "repmeter/common.hpp"
#include "repmeter/encoders.hpp"
#include "repmeter/entropy.hpp"
#include "repmeter/lagsim.hpp"

namespace repmeter {

inline constexpr double kDefaultAlpha = 0.12;

struct SmoothnessBound {
  double value = 0.0;               // upper bound on E ln|J_g|; -inf for a constant representation
  double mean_squared_step = 0.0;   // E||z_{n+1} - z_n||^2
  Index pairs = 0;
  bool constant = false;
};

/// The bound evaluated from a known second moment E||dz||^2.
inline double smoothness_bound_from_moment(double mean_squared_step, double alpha, Index dim) {
  require_arg(alpha > 0.0, "alpha must be positive");
  require_arg(dim >= 1, "dimension must be positive");
  require_arg(mean_squared_step >= 0.0, "mean squared step must be non-negative");
  if (mean_squared_step == 0.0) return kNegInf;
  const double d = static_cast<double>(dim);
  return 0.5 * d * (std::log(mean_squared_step) - std::log(alpha * d));
}

/// Pools consecutive differences over all trajectories. `dim` is the latent
/// dimension entering the bound; pass 0 to take it from the data.
inline SmoothnessBound smoothness_bound(const std::vector<encoders::LatentTrajectory>& latents, double alpha,
                                        Index dim = 0) {
  require_arg(alpha > 0.0, "alpha must be positive");
  require_arg(!latents.empty(), "need at least one latent trajectory");
  const Index d = latents.front().dim();
  if (dim == 0) dim = d;
  require_arg(dim == d, "dimension argument does not match latent dimension");
  SmoothnessBound out;
  double sum = 0.0;
  for (const auto& lt : latents) {
    require_arg(lt.dim() == d, "latent trajectories disagree on dimension");
    require_arg(lt.size() >= 2, "latent trajectory needs at least two steps");
    for (Index n = 0; n + 1 < lt.size(); ++n) sum += (lt.latents.row(n + 1) - lt.latents.row(n)).squaredNorm();
    out.pairs += lt.size() - 1;
  }
  out.mean_squared_step = sum / static_cast<double>(out.pairs);
  out.constant = out.mean_squared_step == 0.0;
  out.value = smoothness_bound_from_moment(out.mean_squared_step, alpha, dim);
  return out;
}

struct AlphaEstimate {
  double alpha = 0.0;
  Vector variances;        // per coordinate
  double anisotropy = 1.0; // max / min variance, +inf when some coordinate is constant
  Index samples = 0;
  bool degenerate = false;
};

/// Moment-matches differences [S x d] to N(0, alpha I): alpha is the mean of
/// the per-coordinate sample variances.
inline AlphaEstimate estimate_alpha_from_differences(const Matrix& diffs) {
  require_arg(diffs.rows() >= 100, "alpha estimation needs at least 100 difference samples, got " +
                                       std::to_string(diffs.rows()));
  AlphaEstimate out;
  out.samples = diffs.rows();
  const Matrix centered = diffs.rowwise() - diffs.colwise().mean();
  out.variances = (centered.cwiseAbs2().colwise().sum() / static_cast<double>(diffs.rows() - 1)).transpose();
  out.alpha = out.variances.mean();
  out.degenerate = !(out.alpha > 0.0);
  const double lo = out.variances.minCoeff();
  out.anisotropy = out.degenerate ? 1.0 : (lo > 0.0 ? out.variances.maxCoeff() / lo : std::numeric_limits<double>::infinity());
  return out;
}

/// Differences of order 1 (z0_{n+1} - z0_n) or 2 (z0_{n+1} - 2 z0_n + z0_{n-1})
/// pooled over all trajectories and time steps.
inline Matrix pooled_differences(const std::vector<lagsim::Trajectory>& trajs, int order) {
  require_arg(order == 1 || order == 2, "difference order must be 1 or 2");
  require_arg(!trajs.empty(), "need at least one trajectory");
  std::vector<Vector> rows;
  for (const auto& t : trajs) {
    for (std::size_t n = static_cast<std::size_t>(order); n < t.size(); ++n) {
      if (order == 1) {
        rows.push_back(t.states[n].stacked() - t.states[n - 1].stacked());
      } else {
        rows.push_back(t.states[n].stacked() - 2.0 * t.states[n - 1].stacked() + t.states[n - 2].stacked());
      }
    }
  }
  require_arg(!rows.empty(), "trajectories too short for the requested difference order");
  Matrix out(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = rows[i].transpose();
  return out;
}

inline AlphaEstimate estimate_alpha(const std::vector<lagsim::Trajectory>& trajs, int order) {
  return estimate_alpha_from_differences(pooled_differences(trajs, order));
}

/// Stacks latent trajectories into one [sum N x d_z] sample matrix.
inline Matrix pooled_latents(const std::vector<encoders::LatentTrajectory>& latents) {
  require_arg(!latents.empty(), "need at least one latent trajectory");
  Index rows = 0;
  for (const auto& l : latents) rows += l.size();
  Matrix out(rows, latents.front().dim());
  Index r = 0;
  for (const auto& l : latents) {
    require_arg(l.dim() == out.cols(), "latent trajectories disagree on dimension");
    out.middleRows(r, l.size()) = l.latents;
    r += l.size();
  }
  return out;
}

inline Matrix pooled_states(const std::vector<lagsim::Trajectory>& trajs) {
  require_arg(!trajs.empty(), "need at least one trajectory");
  Index rows = 0;
  for (const auto& t : trajs) rows += static_cast<Index>(t.size());
  Matrix out(rows, trajs.front().states.front().q.size() * 2);
  Index r = 0;
  for (const auto& t : trajs) {
    out.middleRows(r, static_cast<Index>(t.size())) = t.state_matrix();
    r += static_cast<Index>(t.size());
  }
  return out;
}

inline double mean_step_norm(const std::vector<encoders::LatentTrajectory>& latents) {
  double sum = 0.0;
  Index pairs = 0;
  for (const auto& lt : latents) {
    for (Index n = 0; n + 1 < lt.size(); ++n) sum += (lt.latents.row(n + 1) - lt.latents.row(n)).norm();
    pairs += std::max<Index>(0, lt.size() - 1);
  }
  require_arg(pairs > 0, "no consecutive latent pairs");
  return sum / static_cast<double>(pairs);
}

struct UniquenessScore {
  double entropy = 0.0;         // H(z), nats
  double mean_step_norm = 0.0;  // E||z_{n+1} - z_n||
  std::optional<double> bound;  // only for square pipelines
  std::optional<double> score;  // H(z) - bound
};

/// H(z) - bound. For pipelines with d_z != 2k the score is undefined and only
/// the entropy and mean step norm are reported.
inline UniquenessScore uniqueness_score(const std::vector<encoders::LatentTrajectory>& latents,
                                        const std::vector<lagsim::Trajectory>& states, double alpha,
                                        Index knn_k = 5, std::uint64_t seed = 0) {
  require_arg(latents.size() == states.size(), "latent and state trajectory counts differ");
  for (std::size_t i = 0; i < latents.size(); ++i)
    require_arg(latents[i].size() == static_cast<Index>(states[i].size()), "latent and state trajectories are not aligned");
  UniquenessScore out;
  out.entropy = knn_entropy(pooled_latents(latents), knn_k, seed);
  out.mean_step_norm = mean_step_norm(latents);
  const Index dz = latents.front().dim();
  const Index d0 = states.front().states.front().q.size() * 2;
  if (dz == d0) {
    out.bound = smoothness_bound(latents, alpha, dz).value;
    out.score = out.entropy - *out.bound;
  }
  return out;
}

/// Mean ||z_n - z_{n+T}|| pooled over n and trajectories, for each offset T.
inline std::vector<std::pair<Index, double>> temporal_distance_profile(
    const std::vector<encoders::LatentTrajectory>& latents, const std::vector<Index>& offsets) {
  require_arg(!offsets.empty(), "offset list is empty");
  require_arg(!latents.empty(), "need at least one latent trajectory");
  Index min_len = latents.front().size();
  for (const auto& l : latents) min_len = std::min(min_len, l.size());
  std::vector<std::pair<Index, double>> out;
  for (Index t : offsets) {
    require_arg(t >= 0 && t < min_len, "offset " + std::to_string(t) + " is not below trajectory length");
    double sum = 0.0;
    Index count = 0;
    for (const auto& l : latents) {
      for (Index n = 0; n + t < l.size(); ++n) sum += (l.latents.row(n) - l.latents.row(n + t)).norm();
      count += l.size() - t;
    }
    out.emplace_back(t, sum / static_cast<double>(count));
  }
  return out;
}

struct Histogram {
  std::vector<double> edges;        // bins + 1 ascending edges
  std::vector<std::int64_t> counts; // bins
  std::int64_t skipped = 0;         // pairs with a vanishing true-state step

  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }

  /// Index of the bin that holds `v`, values outside clamp to the end bins.
  std::size_t bin_of(double v) const {
    const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, v);
    return static_cast<std::size_t>(it - (edges.begin() + 1));
  }
};

struct HistogramBins {
  Index count = 20;
  std::optional<double> lo, hi;  // data range when unset
};

inline constexpr double kMinStateStep = 1e-12;

/// Ratios ||z_n - z_{n+1}|| / ||z0_n - z0_{n+1}|| over consecutive pairs.
inline std::vector<double> smoothness_ratios(const std::vector<encoders::LatentTrajectory>& latents,
                                             const std::vector<lagsim::Trajectory>& states,
                                             std::int64_t* skipped = nullptr) {
  require_arg(latents.size() == states.size() && !latents.empty(), "latent and state trajectory counts differ");
  std::vector<double> ratios;
  std::int64_t skip = 0;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const auto& l = latents[i];
    const auto& s = states[i];
    require_arg(l.size() == static_cast<Index>(s.size()), "latent and state trajectories are not aligned");
    require_arg(l.size() >= 2, "trajectory needs at least two steps");
    for (Index n = 0; n + 1 < l.size(); ++n) {
      const double ds = (s.states[static_cast<std::size_t>(n + 1)].stacked() -
                         s.states[static_cast<std::size_t>(n)].stacked()).norm();
      if (ds < kMinStateStep) {
        ++skip;
        continue;
      }
      ratios.push_back((l.latents.row(n + 1) - l.latents.row(n)).norm() / ds);
    }
  }
  if (skipped) *skipped = skip;
  return ratios;
}

inline Histogram make_histogram(const std::vector<double>& values, const HistogramBins& bins) {
  require_arg(bins.count >= 1, "histogram needs at least one bin");
  require_arg(!values.empty(), "no values to histogram");
  double lo = bins.lo.value_or(*std::min_element(values.begin(), values.end()));
  double hi = bins.hi.value_or(*std::max_element(values.begin(), values.end()));
  require_arg(hi >= lo, "histogram range is inverted");
  if (hi == lo) {
    const double pad = 0.5 * std::max(std::abs(lo), 1e-12);
    lo -= pad;
    hi += pad;
  }
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins.count) + 1);
  for (Index b = 0; b <= bins.count; ++b)
    h.edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins.count);
  h.counts.assign(static_cast<std::size_t>(bins.count), 0);
  for (double v : values) ++h.counts[h.bin_of(v)];
  return h;
}

inline Histogram smoothness_ratio_histogram(const std::vector<encoders::LatentTrajectory>& latents,
                                            const std::vector<lagsim::Trajectory>& states,
                                            const HistogramBins& bins = {}) {
  std::int64_t skipped = 0;
  const auto ratios = smoothness_ratios(latents, states, &skipped);
  require(!ratios.empty(), ErrorKind::kDegenerate, "every consecutive pair has a vanishing true-state step");
  Histogram h = make_histogram(ratios, bins);
  h.skipped = skipped;
  return h;
}

}  // namespace repmeter

#endif  // REPMETER_SMOOTHNESS_HPP_
