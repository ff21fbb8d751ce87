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

#include "treval/drift_analysis.hpp"

#include <algorithm>
#include <map>

namespace treval {

void Thresholds::validate() const {
  if (tau_s < 0 || tau_s > kMaxTotal) throw Error(Errc::invalid_config, "tau_s outside [0,24]");
  if (tau_d < 0 || tau_d > kMaxTotal) throw Error(Errc::invalid_config, "tau_d outside [0,24]");
  if (close_n < 1) throw Error(Errc::invalid_config, "close_n must be >= 1");
}

int score_drift(const GroupScores& group) {
  if (!group.complete()) {
    throw Error(Errc::incomplete_group, "group " + group.group_id + " is incomplete");
  }
  auto [lo, hi] = std::minmax_element(group.per_language.begin(), group.per_language.end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; });
  return hi->second - lo->second;
}

std::vector<GroupScores> group_scores(std::span<const Sample> samples, DriftScoreSource source) {
  std::vector<GroupScores> out;
  std::map<std::string, std::size_t, std::less<>> index;
  for (const Sample& s : samples) {
    auto [it, inserted] = index.emplace(s.question.group_id, out.size());
    if (inserted) {
      GroupScores g;
      g.group_id = s.question.group_id;
      g.topic = s.question.topic;
      g.intensity = s.question.intensity;
      out.push_back(std::move(g));
    }
    int score = source == DriftScoreSource::judge_total ? s.card.total : s.card.effective_total();
    out[it->second].per_language[s.question.language] = score;
  }
  return out;
}

std::vector<ScoreCard> weak_failure_filter(std::span<const ScoreCard> cards,
                                           const Thresholds& thresholds) {
  std::vector<ScoreCard> out;
  for (const ScoreCard& c : cards) {
    if (c.effective_total() < thresholds.tau_s ||
        thresholds.risk_flag_set.contains(c.effective_risk())) {
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end(), [](const ScoreCard& a, const ScoreCard& b) {
    int ta = a.effective_total(), tb = b.effective_total();
    return ta != tb ? ta < tb : a.run_id < b.run_id;
  });
  return out;
}

SampleRef SampleRef::of(const Sample& s) {
  return {s.card.run_id,     s.batch_id,       s.question.question_id, s.question.group_id,
          s.question.language, s.question.topic, s.question.intensity};
}

std::vector<Candidate> failure_candidates(const CandidateInputs& inputs,
                                          const Thresholds& thresholds) {
  std::map<std::string, int> drift_by_group;
  for (const GroupScores& g : inputs.groups) {
    if (g.complete()) drift_by_group[g.group_id] = score_drift(g);
  }

  std::map<std::string, Candidate> out;
  for (const Sample& s : inputs.samples) {
    std::optional<int> drift;
    if (auto it = drift_by_group.find(s.question.group_id); it != drift_by_group.end()) {
      drift = it->second;
    }
    TriageDecision d =
        triage(s.card, drift, inputs.manual_marks.contains(s.card.run_id), thresholds);
    if (d.reasons.empty()) continue;
    Candidate& c = out[s.card.run_id];
    c.ref = SampleRef::of(s);
    c.reasons.insert(d.reasons.begin(), d.reasons.end());
  }
  for (const SampleRef& ref : inputs.uncertain) {
    Candidate& c = out[ref.run_id];
    c.ref = ref;
    c.reasons.insert(TriageReason::judge_uncertain);
    if (inputs.manual_marks.contains(ref.run_id)) c.reasons.insert(TriageReason::manual_mark);
  }

  std::vector<Candidate> result;
  result.reserve(out.size());
  for (auto& [id, c] : out) result.push_back(std::move(c));
  return result;
}

DriftSummary drift_summary(std::span<const GroupScores> groups, const Thresholds& thresholds) {
  DriftSummary s;
  for (const GroupScores& g : groups) {
    if (!g.complete()) {
      ++s.incomplete_groups;
      continue;
    }
    int d = score_drift(g);
    ++s.complete_groups;
    s.average_drift.add(d);
    if (d > 0) ++s.nonzero_drift_groups;
    if (d >= thresholds.tau_d) ++s.high_drift_groups;
    s.max_drift = std::max(s.max_drift, d);
  }
  return s;
}

}  // namespace treval
