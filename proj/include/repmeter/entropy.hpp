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

#ifndef REPMETER_ENTROPY_HPP_
#define REPMETER_ENTROPY_HPP_

#include <cstdint>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>

#include "repmeter/common.hpp"
#include "repmeter/knn.hpp"
#include "repmeter/random.hpp"

namespace repmeter {

inline constexpr double kTieJitter = 1e-10;

/// ln of the volume of the unit Euclidean ball in d dimensions.
inline double log_unit_ball_volume(Index d) {
  const double h = 0.5 * static_cast<double>(d);
  return h * std::log(std::numbers::pi) - std::lgamma(h + 1.0);
}

/// Kozachenko-Leonenko differential entropy estimate in nats:
///
///   H = psi(S) - psi(k) + ln V_d + (d / S) sum_i ln r_i
///
/// where r_i is the Euclidean distance from sample i to its k-th neighbour.
/// If any sample has a zero k-th neighbour distance (duplicates), all samples
/// are jittered by kTieJitter-scaled uniform noise from `seed` and the
/// estimate is recomputed.
inline double knn_entropy(const Matrix& samples, Index k = 5, std::uint64_t seed = 0) {
  const Index s = samples.rows();
  const Index d = samples.cols();
  require_arg(k >= 1, "k must be at least 1");
  require_arg(s > k, "knn entropy needs more samples than k");
  require_arg(d >= 1, "samples need at least one column");
  require_arg(samples.allFinite(), "samples contain non-finite values");
  require((samples.rowwise() - samples.row(0)).cwiseAbs().maxCoeff() > 0.0, ErrorKind::kDegenerate,
          "all samples are identical; entropy is -inf");

  auto sum_log_radius = [&](const Matrix& pts, bool& has_tie) {
    const KdTree tree(pts);
    double acc = 0.0;
    has_tie = false;
    for (Index i = 0; i < s; ++i) {
      const auto nb = tree.nearest(pts.row(i), k, i);
      const double r2 = nb.back().squared_distance;
      if (r2 <= 0.0) {
        has_tie = true;
        return 0.0;
      }
      acc += 0.5 * std::log(r2);
    }
    return acc;
  };

  bool tie = false;
  double acc = sum_log_radius(samples, tie);
  if (tie) {
    CounterRng rng(seed);
    Matrix jittered = samples;
    const double scale = kTieJitter * std::max(1.0, samples.cwiseAbs().maxCoeff());
    for (Index i = 0; i < s; ++i)
      for (Index j = 0; j < d; ++j) jittered(i, j) += rng.uniform(-scale, scale);
    acc = sum_log_radius(jittered, tie);
    require(!tie, ErrorKind::kDegenerate, "duplicate samples survive jitter");
  }
  using boost::math::digamma;
  return digamma(static_cast<double>(s)) - digamma(static_cast<double>(k)) + log_unit_ball_volume(d) +
         static_cast<double>(d) * acc / static_cast<double>(s);
}

/// Differential entropy of N(mu, cov): (1/2) ln det(2 pi e cov).
inline double gaussian_entropy(const Matrix& cov) {
  require_arg(cov.rows() == cov.cols() && cov.rows() >= 1, "covariance must be square");
  Eigen::LLT<Matrix> llt(cov);
  require_arg(llt.info() == Eigen::Success, "covariance must be positive definite");
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * (static_cast<double>(cov.rows()) * std::log(2.0 * std::numbers::pi * std::numbers::e) + logdet);
}

}  // namespace repmeter

#endif  // REPMETER_ENTROPY_HPP_
