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

#ifndef TREVAL_DATASET_HPP_
#define TREVAL_DATASET_HPP_

#include <string>
#include <vector>

#include "treval/batch_runtime.hpp"
#include "treval/judging.hpp"
#include "treval/question_bank.hpp"

namespace treval {

// One judged run joined with its question and batch context. This is the
// row unit of CSV exports and the input to every statistic.
struct Sample {
  std::string batch_id;
  BatchKind batch_kind = BatchKind::evaluation;
  SystemConfig config;
  Question question;
  std::string routed_model_id;
  RunStatus run_status = RunStatus::ok;
  std::string response_text;
  ScoreCard card;

  const std::string& run_id() const { return card.run_id; }

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::vector<Sample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }

  // Order-independent content hash (hex) over run identity and scores. Two
  // reports built from the same dataset carry the same fingerprint.
  std::string fingerprint() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace treval

#endif  // TREVAL_DATASET_HPP_
