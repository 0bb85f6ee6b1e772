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

#ifndef REPMETER_COMMON_HPP_
#define REPMETER_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace repmeter {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

enum class ErrorKind {
  kInvalidArgument,
  kNumericFailure,
  kDiverged,
  kNonDifferentiable,
  kDegenerate,
  kDataCorruption,
  kSchemaMismatch,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kNumericFailure: return "numeric-failure";
    case ErrorKind::kDiverged: return "diverged";
    case ErrorKind::kNonDifferentiable: return "non-differentiable";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kDataCorruption: return "data-corruption";
    case ErrorKind::kSchemaMismatch: return "schema-mismatch";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Throws `Error(kind, message)` unless `condition` holds.
inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

inline void require_arg(bool condition, const std::string& message) {
  require(condition, ErrorKind::kInvalidArgument, message);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace repmeter

#endif  // REPMETER_COMMON_HPP_
