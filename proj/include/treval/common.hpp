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

#ifndef TREVAL_COMMON_HPP_
#define TREVAL_COMMON_HPP_

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace treval {

// Error codes surfaced by every module. The string form is part of the
// service wire contract.
enum class Errc {
  bad_request,
  unknown_code,
  unknown_filter_value,
  duplicate_id,
  invalid_row,
  empty_selection,
  invalid_config,
  already_executed,
  unknown_batch,
  missing_dimension,
  out_of_range,
  judge_unreachable,
  unparseable_judge_output,
  incomplete_group,
  unknown_run,
  invalid_review,
  not_a_candidate,
  unknown_case,
  closed_case,
  not_patched,
  empty_regression,
  question_not_in_batch,
  not_in_regression,
  not_closed,
  no_evidence,
  illegal_transition,
  empty_dataset,
  dataset_mismatch,
  header_mismatch,
  duplicate_run,
  io_error,
  unauthorized,
  not_found,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  explicit Error(Errc code) : Error(code, std::string(to_string(code))) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// ---------------------------------------------------------------------------
// Closed vocabularies

enum class Language { zh_cn, zh_hk, en };
inline constexpr std::array<Language, 3> kLanguages = {
    Language::zh_cn, Language::zh_hk, Language::en};

std::string_view to_string(Language lang);
std::string_view display_name(Language lang);
Language parse_language(std::string_view text);

// Ordered neutral < mild < charged.
enum class Intensity { neutral, mild, charged };
inline constexpr std::array<Intensity, 3> kIntensities = {
    Intensity::neutral, Intensity::mild, Intensity::charged};

std::string_view to_string(Intensity level);
Intensity parse_intensity(std::string_view text);

enum class BoundaryCategory { policy, service, broadcast };

std::string_view to_string(BoundaryCategory category);
BoundaryCategory parse_boundary(std::string_view text);

// Ordered best to worst. Everything except `excellent` is flagged by the
// default risk set.
enum class RiskLevel { excellent, usable, risky, unacceptable };
inline constexpr std::array<RiskLevel, 4> kRiskLevels = {
    RiskLevel::excellent, RiskLevel::usable, RiskLevel::risky,
    RiskLevel::unacceptable};

std::string_view to_string(RiskLevel level);
RiskLevel parse_risk(std::string_view text);

// One of the nine structured topic types. Public codes T1..T9 pair with
// internal codes Q01..Q09.
class TopicType {
 public:
  static constexpr int kCount = 9;

  // Accepts either namespace ("T8" or "Q08").
  static TopicType parse(std::string_view code);
  static TopicType from_index(int index);

  int index() const noexcept { return index_; }
  std::string public_code() const;
  std::string internal_code() const;
  std::string_view name() const;

  friend bool operator==(TopicType, TopicType) = default;
  friend auto operator<=>(TopicType, TopicType) = default;

 private:
  explicit TopicType(int index) : index_(index) {}
  int index_ = 1;
};

// Translates T<k> to Q0<k> and back. Throws Errc::unknown_code.
std::string topic_code_map(std::string_view code);

// ---------------------------------------------------------------------------
// Time

using Timestamp = std::chrono::sys_seconds;
using Clock = std::function<Timestamp()>;

Timestamp system_now();
// ISO-8601 UTC, e.g. 2026-04-01T09:30:00Z.
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);

// Numeric-aware version ordering ("v1.10" > "v1.9"). Non-digit runs compare
// lexicographically.
int compare_versions(std::string_view a, std::string_view b);

}  // namespace treval

#endif  // TREVAL_COMMON_HPP_
