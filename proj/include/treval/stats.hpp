// Copyright 2026 The treval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TREVAL_STATS_HPP_
#define TREVAL_STATS_HPP_

#include <cstdint>
#include <string>

namespace treval {

// An average kept as an exact ratio of integers. Rounding happens only when
// rendering.
struct ExactMean {
  std::int64_t sum = 0;
  std::int64_t count = 0;

  void add(std::int64_t value) {
    sum += value;
    ++count;
  }
  double value() const { return count == 0 ? 0.0 : static_cast<double>(sum) / count; }

  // Half-up rounding to two decimals, e.g. 36/27 -> "1.33", 1875/81 -> "23.15".
  // Requires a non-negative sum. An empty mean renders as "0.00".
  std::string round2() const;

  friend bool operator==(const ExactMean&, const ExactMean&) = default;
};

}  // namespace treval

#endif  // TREVAL_STATS_HPP_
