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

#ifndef TREVAL_QUESTION_BANK_HPP_
#define TREVAL_QUESTION_BANK_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treval/common.hpp"
#include "treval/csv.hpp"

namespace treval {

struct Question {
  std::string question_id;  // <topic internal>_<intensity>_<language>
  std::string group_id;     // <topic internal>_<intensity>
  Language language = Language::zh_cn;
  TopicType topic = TopicType::from_index(1);
  Intensity intensity = Intensity::neutral;
  BoundaryCategory boundary = BoundaryCategory::policy;
  std::string text;

  friend bool operator==(const Question&, const Question&) = default;
};

// Members keyed by language. A group is complete when all three languages
// are present and consistent when every member shares topic, intensity and
// boundary category.
struct TrilingualGroup {
  std::string group_id;
  std::map<Language, std::string> members;
  TopicType topic = TopicType::from_index(1);
  Intensity intensity = Intensity::neutral;
  BoundaryCategory boundary = BoundaryCategory::policy;
  bool consistent = true;

  bool complete() const { return members.size() == kLanguages.size(); }
};

// Default boundary category per topic (index 0 is T1). Operators are
// expected to override this; the bank CSV may also carry an explicit value.
using BoundaryTable = std::array<BoundaryCategory, TopicType::kCount>;
BoundaryTable default_boundary_table();

// Immutable after construction. Re-importing produces a new bank with a
// higher version.
class QuestionBank {
 public:
  QuestionBank() = default;
  // Throws Error(Errc::duplicate_id) on a repeated question_id.
  QuestionBank(std::vector<Question> questions, std::uint64_t version = 1);

  const std::vector<Question>& questions() const { return questions_; }
  const std::vector<TrilingualGroup>& groups() const { return groups_; }
  std::uint64_t version() const { return version_; }
  std::size_t size() const { return questions_.size(); }
  bool empty() const { return questions_.empty(); }

  const Question* find(std::string_view question_id) const;
  const TrilingualGroup* find_group(std::string_view group_id) const;

  std::size_t complete_group_count() const;
  std::vector<const TrilingualGroup*> incomplete_groups() const;

 private:
  std::vector<Question> questions_;
  std::vector<TrilingualGroup> groups_;  // first-appearance order
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::map<std::string, std::size_t, std::less<>> group_index_;
  std::uint64_t version_ = 0;
};

struct RowError {
  std::size_t row = 0;  // 1-based data row
  std::string column;
  std::string message;
};

class BankImportError : public Error {
 public:
  explicit BankImportError(std::vector<RowError> errors);
  const std::vector<RowError>& errors() const { return errors_; }

 private:
  std::vector<RowError> errors_;
};

// Column names of the ingestion format, in order.
inline constexpr std::array<std::string_view, 8> kBankColumns = {
    "question_id", "group_id", "language",  "topic_public",
    "topic_internal", "intensity", "boundary", "text"};

// Validates every row and collects all row-level problems before failing.
// An empty `boundary` cell falls back to `boundaries`. Throws BankImportError.
QuestionBank import_question_bank(const csv::Table& table,
                                  const BoundaryTable& boundaries = default_boundary_table(),
                                  std::uint64_t version = 1);
QuestionBank import_question_bank(std::string_view csv_text,
                                  const BoundaryTable& boundaries = default_boundary_table(),
                                  std::uint64_t version = 1);

csv::Table export_question_bank(const QuestionBank& bank);

struct GroupViolation {
  enum class Kind { missing_language, inconsistent_metadata };

  std::string group_id;
  Kind kind = Kind::missing_language;
  std::optional<Language> language;  // set for missing_language
  std::string detail;

  friend bool operator==(const GroupViolation&, const GroupViolation&) = default;
};

std::string_view to_string(GroupViolation::Kind kind);

// One violation per missing language and one per inconsistent group.
std::vector<GroupViolation> validate_groups(const QuestionBank& bank);

struct QuestionFilter {
  std::optional<TopicType> topic;
  std::optional<Language> language;
  std::optional<Intensity> intensity;
  std::optional<std::string> group_id;

  // Keys: topic (T- or Q-code), language, intensity, group.
  // Throws Error(Errc::unknown_filter_value).
  static QuestionFilter parse(const std::map<std::string, std::string>& fields);

  bool matches(const Question& q) const;
};

// Questions matching every supplied criterion, in bank order. A group filter
// naming a group absent from the bank is an unknown filter value.
std::vector<Question> filter_questions(const QuestionBank& bank, const QuestionFilter& filter);

}  // namespace treval

#endif  // TREVAL_QUESTION_BANK_HPP_
