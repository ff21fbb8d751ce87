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

#ifndef TREVAL_THRESHOLDS_HPP_
#define TREVAL_THRESHOLDS_HPP_

#include <set>

#include "treval/common.hpp"

namespace treval {

// Which total feeds group drift: the judge's total or the latest human
// override when one exists.
enum class DriftScoreSource { judge_total, human_override };

struct Thresholds {
  int tau_s = 20;  // total < tau_s is a low score
  int tau_d = 3;   // drift >= tau_d is a high-drift group
  std::set<RiskLevel> risk_flag_set = {RiskLevel::usable, RiskLevel::risky,
                                       RiskLevel::unacceptable};
  int close_n = 3;  // consecutive regression passes needed to close
  DriftScoreSource drift_source = DriftScoreSource::judge_total;
  // Judge-reported confidence below this marks the card uncertain.
  double confidence_floor = 0.0;

  // Throws Error(Errc::invalid_config).
  void validate() const;

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

}  // namespace treval

#endif  // TREVAL_THRESHOLDS_HPP_
