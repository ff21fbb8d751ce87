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

#ifndef TREVAL_DRIFT_ANALYSIS_HPP_
#define TREVAL_DRIFT_ANALYSIS_HPP_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "treval/dataset.hpp"
#include "treval/judging.hpp"
#include "treval/stats.hpp"
#include "treval/thresholds.hpp"

namespace treval {

struct GroupScores {
  std::string group_id;
  TopicType topic = TopicType::from_index(1);
  Intensity intensity = Intensity::neutral;
  std::map<Language, int> per_language;

  bool complete() const { return per_language.size() == kLanguages.size(); }
};

// Max minus min over the three language totals. Throws Errc::incomplete_group.
int score_drift(const GroupScores& group);

// Groups the samples by group_id, in first-appearance order. The score source
// follows thresholds.drift_source.
std::vector<GroupScores> group_scores(std::span<const Sample> samples,
                                      DriftScoreSource source = DriftScoreSource::judge_total);

// Cards with total < tau_s or a flagged risk, ascending by total then run_id.
std::vector<ScoreCard> weak_failure_filter(std::span<const ScoreCard> cards,
                                           const Thresholds& thresholds);

// Identifies a sample that entered the candidate set.
struct SampleRef {
  std::string run_id;
  std::string batch_id;
  std::string question_id;
  std::string group_id;
  Language language = Language::zh_cn;
  TopicType topic = TopicType::from_index(1);
  Intensity intensity = Intensity::neutral;

  static SampleRef of(const Sample& s);
  friend bool operator==(const SampleRef&, const SampleRef&) = default;
};

struct Candidate {
  SampleRef ref;
  std::set<TriageReason> reasons;
};

struct CandidateInputs {
  std::span<const Sample> samples;
  std::span<const GroupScores> groups;  // drift is taken from complete groups
  std::set<std::string> manual_marks;   // run ids
  std::vector<SampleRef> uncertain;     // runs whose judge output was invalid
};

// Union of weak-score, risk-flagged, high-drift-group members, human-fail and
// manually marked samples, plus uncertain judge outputs. Each candidate lists
// every clause that put it there. Ordered by run_id.
std::vector<Candidate> failure_candidates(const CandidateInputs& inputs,
                                          const Thresholds& thresholds);

struct DriftSummary {
  int complete_groups = 0;
  int incomplete_groups = 0;
  int nonzero_drift_groups = 0;
  int high_drift_groups = 0;
  int max_drift = 0;
  ExactMean average_drift;  // over complete groups

  friend bool operator==(const DriftSummary&, const DriftSummary&) = default;
};

DriftSummary drift_summary(std::span<const GroupScores> groups, const Thresholds& thresholds);

}  // namespace treval

#endif  // TREVAL_DRIFT_ANALYSIS_HPP_
