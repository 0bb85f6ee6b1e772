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

#ifndef REPMETER_RANDOM_HPP_
#define REPMETER_RANDOM_HPP_

#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "repmeter/common.hpp"

namespace repmeter {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the `index`-th independent work unit derived from `base`.
/// The base is hashed first so that small bases and small indices do not
/// collide under the xor.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return mix64(base) ^ index;
}

/// Counter-based generator: the n-th draw is a pure function of (key, n),
/// so streams are reproducible on every platform and cheap to fork.
/// Satisfies std::uniform_random_bit_generator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0) noexcept : key_(mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
  }

  std::uint64_t counter() const noexcept { return counter_; }

  /// Uniform on the open interval (0, 1), 53 bits of mantissa.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Unbiased integer in [0, bound) (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    while (true) {
      const unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= bound || low >= (-bound) % bound) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<Index> permutation(Index n) {
    std::vector<Index> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), Index{0});
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
    return p;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Square root factor L with L L^T = cov for a symmetric PSD matrix.
/// Works for singular covariances (e.g. zero exploration noise).
inline Matrix psd_factor(const Matrix& cov, const std::string& what = "covariance") {
  require_arg(cov.rows() == cov.cols(), what + " must be square");
  if (cov.size() == 0) return cov;
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  require_arg((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale, what + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  require(eig.info() == Eigen::Success, ErrorKind::kNumericFailure, what + ": eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  require_arg(lambda.minCoeff() >= -1e-10 * scale, what + " must be positive semi-definite");
  return eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace repmeter

#endif  // REPMETER_RANDOM_HPP_
