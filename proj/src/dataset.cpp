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

#include "treval/dataset.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>

namespace treval {

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical_line(const Sample& s) {
  std::string line = s.run_id();
  line += '|';
  line += s.batch_id;
  line += '|';
  line += s.question.question_id;
  line += '|';
  line += s.question.group_id;
  line += '|';
  line += to_string(s.question.language);
  for (int d : s.card.dims) {
    line += '|';
    line += std::to_string(d);
  }
  line += '|';
  line += std::to_string(s.card.total);
  line += '|';
  line += to_string(s.card.risk);
  line += '|';
  line += std::to_string(s.card.effective_total());
  line += '|';
  line += to_string(s.card.effective_risk());
  line += '|';
  line += std::to_string(s.card.review_trail.size());
  return line;
}

}  // namespace

std::string Dataset::fingerprint() const {
  std::vector<std::string> lines;
  lines.reserve(samples.size());
  for (const auto& s : samples) lines.push_back(canonical_line(s));
  std::sort(lines.begin(), lines.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& line : lines) {
    h = fnv1a(line, h);
    h = fnv1a("\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace treval
