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

#include "treval/common.hpp"

#include <cctype>
#include <charconv>
#include <ctime>

namespace treval {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::bad_request: return "bad_request";
    case Errc::unknown_code: return "unknown_code";
    case Errc::unknown_filter_value: return "unknown_filter_value";
    case Errc::duplicate_id: return "duplicate_id";
    case Errc::invalid_row: return "invalid_row";
    case Errc::empty_selection: return "empty_selection";
    case Errc::invalid_config: return "invalid_config";
    case Errc::already_executed: return "already_executed";
    case Errc::unknown_batch: return "unknown_batch";
    case Errc::missing_dimension: return "missing_dimension";
    case Errc::out_of_range: return "out_of_range";
    case Errc::judge_unreachable: return "judge_unreachable";
    case Errc::unparseable_judge_output: return "unparseable_judge_output";
    case Errc::incomplete_group: return "incomplete_group";
    case Errc::unknown_run: return "unknown_run";
    case Errc::invalid_review: return "invalid_review";
    case Errc::not_a_candidate: return "not_a_candidate";
    case Errc::unknown_case: return "unknown_case";
    case Errc::closed_case: return "closed_case";
    case Errc::not_patched: return "not_patched";
    case Errc::empty_regression: return "empty_regression";
    case Errc::question_not_in_batch: return "question_not_in_batch";
    case Errc::not_in_regression: return "not_in_regression";
    case Errc::not_closed: return "not_closed";
    case Errc::no_evidence: return "no_evidence";
    case Errc::illegal_transition: return "illegal_transition";
    case Errc::empty_dataset: return "empty";
    case Errc::dataset_mismatch: return "dataset_mismatch";
    case Errc::header_mismatch: return "header_mismatch";
    case Errc::duplicate_run: return "duplicate_run";
    case Errc::io_error: return "io_error";
    case Errc::unauthorized: return "unauthorized";
    case Errc::not_found: return "not_found";
  }
  return "unknown";
}

std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::zh_cn: return "zh_cn";
    case Language::zh_hk: return "zh_hk";
    case Language::en: return "en";
  }
  return "?";
}

std::string_view display_name(Language lang) {
  switch (lang) {
    case Language::zh_cn: return "Mandarin";
    case Language::zh_hk: return "Cantonese";
    case Language::en: return "English";
  }
  return "?";
}

Language parse_language(std::string_view text) {
  for (Language l : kLanguages) {
    if (to_string(l) == text) return l;
  }
  throw Error(Errc::unknown_code, "unknown language '" + std::string(text) + "'");
}

std::string_view to_string(Intensity level) {
  switch (level) {
    case Intensity::neutral: return "neutral";
    case Intensity::mild: return "mild";
    case Intensity::charged: return "charged";
  }
  return "?";
}

Intensity parse_intensity(std::string_view text) {
  for (Intensity i : kIntensities) {
    if (to_string(i) == text) return i;
  }
  throw Error(Errc::unknown_code, "unknown intensity '" + std::string(text) + "'");
}

std::string_view to_string(BoundaryCategory category) {
  switch (category) {
    case BoundaryCategory::policy: return "policy";
    case BoundaryCategory::service: return "service";
    case BoundaryCategory::broadcast: return "broadcast";
  }
  return "?";
}

BoundaryCategory parse_boundary(std::string_view text) {
  for (auto c : {BoundaryCategory::policy, BoundaryCategory::service,
                 BoundaryCategory::broadcast}) {
    if (to_string(c) == text) return c;
  }
  throw Error(Errc::unknown_code, "unknown boundary '" + std::string(text) + "'");
}

std::string_view to_string(RiskLevel level) {
  switch (level) {
    case RiskLevel::excellent: return "excellent";
    case RiskLevel::usable: return "usable";
    case RiskLevel::risky: return "risky";
    case RiskLevel::unacceptable: return "unacceptable";
  }
  return "?";
}

RiskLevel parse_risk(std::string_view text) {
  for (RiskLevel r : kRiskLevels) {
    if (to_string(r) == text) return r;
  }
  throw Error(Errc::unknown_code, "unknown risk level '" + std::string(text) + "'");
}

namespace {

constexpr std::array<std::string_view, TopicType::kCount> kTopicNames = {
    "Governance system interpretation drift",
    "Cross-region narrative divergence",
    "Institutional entity framing",
    "Public-event narrative framing",
    "Cross-source media narrative divergence",
    "Entity attribution ambiguity",
    "Language-identity coupling",
    "Public-space response boundary pressure",
    "Service-task usability baseline",
};

std::optional<int> parse_digits(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

TopicType TopicType::parse(std::string_view code) {
  std::optional<int> k;
  if (code.size() == 2 && code[0] == 'T') {
    k = parse_digits(code.substr(1));
  } else if (code.size() == 3 && code[0] == 'Q' && code[1] == '0') {
    k = parse_digits(code.substr(2));
  }
  if (!k || *k < 1 || *k > kCount) {
    throw Error(Errc::unknown_code, "unknown topic code '" + std::string(code) + "'");
  }
  return TopicType(*k);
}

TopicType TopicType::from_index(int index) {
  if (index < 1 || index > kCount) {
    throw Error(Errc::unknown_code, "topic index out of range");
  }
  return TopicType(index);
}

std::string TopicType::public_code() const { return "T" + std::to_string(index_); }
std::string TopicType::internal_code() const { return "Q0" + std::to_string(index_); }
std::string_view TopicType::name() const { return kTopicNames[index_ - 1]; }

std::string topic_code_map(std::string_view code) {
  TopicType t = TopicType::parse(code);
  return code.front() == 'T' ? t.internal_code() : t.public_code();
}

Timestamp system_now() {
  return std::chrono::time_point_cast<std::chrono::seconds>(
      std::chrono::system_clock::now());
}

std::string format_timestamp(Timestamp t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  std::tm tm{};
  std::string s(text);
  const char* end = strptime(s.c_str(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  if (end == nullptr || *end != '\0') {
    throw Error(Errc::bad_request, "bad timestamp '" + s + "'");
  }
  return Timestamp(std::chrono::seconds(timegm(&tm)));
}

int compare_versions(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size() ? -1 : 1;
      if (int c = na.compare(nb); c != 0) return c < 0 ? -1 : 1;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j] ? -1 : 1;
      ++i;
      ++j;
    }
  }
  if (i < a.size()) return 1;
  if (j < b.size()) return -1;
  return 0;
}

}  // namespace treval
