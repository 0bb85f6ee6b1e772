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

#ifndef REPMETER_STATS_HPP_
#define REPMETER_STATS_HPP_

#include <cmath>
#include <optional>
#include <vector>

#include "repmeter/common.hpp"

namespace repmeter {

/// Across-seed summary. `spread` is the sample standard deviation and only
/// exists for two or more values.
struct Summary {
  double mean = 0.0;
  std::optional<double> spread;
  std::size_t count = 0;
};

inline Summary summarize(const std::vector<double>& values) {
  require_arg(!values.empty(), "cannot summarize an empty set");
  Summary s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.spread = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace repmeter

#endif  // REPMETER_STATS_HPP_
