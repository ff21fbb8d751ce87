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

#include "treval/question_bank.hpp"

#include <algorithm>
#include <set>

namespace treval {

BoundaryTable default_boundary_table() {
  // Placeholder assignment; only T9 is a service-task topic by name.
  BoundaryTable table;
  table.fill(BoundaryCategory::policy);
  table[8] = BoundaryCategory::service;
  return table;
}

QuestionBank::QuestionBank(std::vector<Question> questions, std::uint64_t version)
    : questions_(std::move(questions)), version_(version) {
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    const Question& q = questions_[i];
    if (!by_id_.emplace(q.question_id, i).second) {
      throw Error(Errc::duplicate_id, "duplicate question_id " + q.question_id);
    }
    auto [it, inserted] = group_index_.emplace(q.group_id, groups_.size());
    if (inserted) {
      TrilingualGroup g;
      g.group_id = q.group_id;
      g.topic = q.topic;
      g.intensity = q.intensity;
      g.boundary = q.boundary;
      groups_.push_back(std::move(g));
    }
    TrilingualGroup& g = groups_[it->second];
    if (g.topic != q.topic || g.intensity != q.intensity || g.boundary != q.boundary) {
      g.consistent = false;
    }
    g.members.emplace(q.language, q.question_id);
  }
}

const Question* QuestionBank::find(std::string_view question_id) const {
  auto it = by_id_.find(question_id);
  return it == by_id_.end() ? nullptr : &questions_[it->second];
}

const TrilingualGroup* QuestionBank::find_group(std::string_view group_id) const {
  auto it = group_index_.find(group_id);
  return it == group_index_.end() ? nullptr : &groups_[it->second];
}

std::size_t QuestionBank::complete_group_count() const {
  return static_cast<std::size_t>(
      std::count_if(groups_.begin(), groups_.end(), [](const auto& g) { return g.complete(); }));
}

std::vector<const TrilingualGroup*> QuestionBank::incomplete_groups() const {
  std::vector<const TrilingualGroup*> out;
  for (const auto& g : groups_) {
    if (!g.complete()) out.push_back(&g);
  }
  return out;
}

namespace {

std::string summarize(const std::vector<RowError>& errors) {
  std::string msg = std::to_string(errors.size()) + " invalid row(s)";
  if (!errors.empty()) {
    msg += "; first: row " + std::to_string(errors.front().row) + " " +
           errors.front().column + ": " + errors.front().message;
  }
  return msg;
}

}  // namespace

BankImportError::BankImportError(std::vector<RowError> errors)
    : Error(Errc::invalid_row, summarize(errors)), errors_(std::move(errors)) {}

QuestionBank import_question_bank(const csv::Table& table, const BoundaryTable& boundaries,
                                  std::uint64_t version) {
  if (table.header.empty() && table.rows.empty()) return QuestionBank({}, version);

  std::array<std::size_t, kBankColumns.size()> col{};
  std::vector<RowError> errors;
  for (std::size_t i = 0; i < kBankColumns.size(); ++i) {
    col[i] = table.column(kBankColumns[i]);
    // boundary may be omitted and defaulted per topic
    if (col[i] == csv::npos && kBankColumns[i] != "boundary") {
      errors.push_back({0, std::string(kBankColumns[i]), "missing column"});
    }
  }
  if (!errors.empty()) throw BankImportError(std::move(errors));

  std::vector<Question> questions;
  std::set<std::string, std::less<>> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t rowno = r + 1;
    auto cell = [&](std::size_t c) -> std::string_view {
      std::size_t idx = col[c];
      return idx < row.size() ? std::string_view(row[idx]) : std::string_view();
    };
    std::size_t before = errors.size();
    auto fail = [&](std::size_t c, std::string message) {
      errors.push_back({rowno, std::string(kBankColumns[c]), std::move(message)});
    };

    Question q;
    q.question_id = std::string(cell(0));
    q.group_id = std::string(cell(1));
    q.text = std::string(cell(7));
    if (q.question_id.empty()) fail(0, "empty question_id");
    if (q.group_id.empty()) fail(1, "empty group_id");
    try {
      q.language = parse_language(cell(2));
    } catch (const Error& e) {
      fail(2, e.what());
    }
    std::optional<TopicType> pub, internal;
    try {
      pub = TopicType::parse(cell(3));
      if (cell(3).front() != 'T') fail(3, "expected a T-code");
    } catch (const Error& e) {
      fail(3, e.what());
    }
    try {
      internal = TopicType::parse(cell(4));
      if (cell(4).front() != 'Q') fail(4, "expected a Q-code");
    } catch (const Error& e) {
      fail(4, e.what());
    }
    if (pub && internal && *pub != *internal) fail(4, "topic codes disagree");
    if (internal) q.topic = *internal;
    try {
      q.intensity = parse_intensity(cell(5));
    } catch (const Error& e) {
      fail(5, e.what());
    }
    if (col[6] == csv::npos || cell(6).empty()) {
      q.boundary = boundaries[static_cast<std::size_t>(q.topic.index() - 1)];
    } else {
      try {
        q.boundary = parse_boundary(cell(6));
      } catch (const Error& e) {
        fail(6, e.what());
      }
    }
    if (errors.size() == before && q.question_id != q.group_id + "_" + std::string(cell(2))) {
      fail(0, "question_id must be <group_id>_<language>");
    }
    if (!q.question_id.empty() && !seen.insert(q.question_id).second) {
      fail(0, "duplicate question_id " + q.question_id);
    }
    if (errors.size() == before) questions.push_back(std::move(q));
  }
  if (!errors.empty()) throw BankImportError(std::move(errors));
  return QuestionBank(std::move(questions), version);
}

QuestionBank import_question_bank(std::string_view csv_text, const BoundaryTable& boundaries,
                                  std::uint64_t version) {
  return import_question_bank(csv::parse(csv_text), boundaries, version);
}

csv::Table export_question_bank(const QuestionBank& bank) {
  csv::Table t;
  t.header.assign(kBankColumns.begin(), kBankColumns.end());
  for (const Question& q : bank.questions()) {
    t.rows.push_back({q.question_id, q.group_id, std::string(to_string(q.language)),
                      q.topic.public_code(), q.topic.internal_code(),
                      std::string(to_string(q.intensity)), std::string(to_string(q.boundary)),
                      q.text});
  }
  return t;
}

std::string_view to_string(GroupViolation::Kind kind) {
  return kind == GroupViolation::Kind::missing_language ? "missing_language"
                                                        : "inconsistent_metadata";
}

std::vector<GroupViolation> validate_groups(const QuestionBank& bank) {
  std::vector<GroupViolation> out;
  for (const TrilingualGroup& g : bank.groups()) {
    for (Language l : kLanguages) {
      if (!g.members.contains(l)) {
        out.push_back({g.group_id, GroupViolation::Kind::missing_language, l,
                       "no " + std::string(to_string(l)) + " member"});
      }
    }
    if (!g.consistent) {
      std::string detail;
      for (const auto& [lang, qid] : g.members) {
        const Question* q = bank.find(qid);
        if (!detail.empty()) detail += "; ";
        detail += qid + "=" + q->topic.public_code() + "/" + std::string(to_string(q->intensity)) +
                  "/" + std::string(to_string(q->boundary));
      }
      out.push_back({g.group_id, GroupViolation::Kind::inconsistent_metadata, std::nullopt,
                     std::move(detail)});
    }
  }
  return out;
}

QuestionFilter QuestionFilter::parse(const std::map<std::string, std::string>& fields) {
  QuestionFilter f;
  for (const auto& [key, value] : fields) {
    if (value.empty()) continue;
    try {
      if (key == "topic") {
        f.topic = TopicType::parse(value);
      } else if (key == "language") {
        f.language = parse_language(value);
      } else if (key == "intensity") {
        f.intensity = parse_intensity(value);
      } else if (key == "group") {
        f.group_id = value;
      } else {
        throw Error(Errc::unknown_filter_value, "unknown filter key '" + key + "'");
      }
    } catch (const Error& e) {
      if (e.code() == Errc::unknown_filter_value) throw;
      throw Error(Errc::unknown_filter_value, e.what());
    }
  }
  return f;
}

bool QuestionFilter::matches(const Question& q) const {
  return (!topic || q.topic == *topic) && (!language || q.language == *language) &&
         (!intensity || q.intensity == *intensity) && (!group_id || q.group_id == *group_id);
}

std::vector<Question> filter_questions(const QuestionBank& bank, const QuestionFilter& filter) {
  if (filter.group_id && bank.find_group(*filter.group_id) == nullptr) {
    throw Error(Errc::unknown_filter_value, "unknown group '" + *filter.group_id + "'");
  }
  std::vector<Question> out;
  std::copy_if(bank.questions().begin(), bank.questions().end(), std::back_inserter(out),
               [&](const Question& q) { return filter.matches(q); });
  return out;
}

}  // namespace treval
