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

#include <gtest/gtest.h>

#include <random>

#include "treval/common.hpp"
#include "treval/csv.hpp"
#include "treval/stats.hpp"

namespace treval {
namespace {

TEST(TopicCodes, MapBetweenNamespaces) {
  EXPECT_EQ(topic_code_map("T8"), "Q08");
  EXPECT_EQ(topic_code_map("Q08"), "T8");
  EXPECT_EQ(TopicType::parse("T1"), TopicType::parse("Q01"));
  EXPECT_EQ(TopicType::from_index(9).public_code(), "T9");
}

TEST(TopicCodes, MapIsAnInvolution) {
  for (int k = 1; k <= TopicType::kCount; ++k) {
    std::string t = "T" + std::to_string(k);
    std::string q = topic_code_map(t);
    EXPECT_EQ(topic_code_map(q), t);
  }
}

TEST(TopicCodes, RejectsUnknownCodes) {
  for (const char* bad : {"T0", "T10", "Q10", "Q00", "X1", "", "T", "t8"}) {
    try {
      topic_code_map(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::unknown_code) << bad;
    }
  }
}

TEST(Vocabulary, RoundTripsEveryName) {
  for (Language l : kLanguages) EXPECT_EQ(parse_language(to_string(l)), l);
  for (Intensity i : kIntensities) EXPECT_EQ(parse_intensity(to_string(i)), i);
  for (RiskLevel r : kRiskLevels) EXPECT_EQ(parse_risk(to_string(r)), r);
  for (auto b : {BoundaryCategory::policy, BoundaryCategory::service, BoundaryCategory::broadcast}) {
    EXPECT_EQ(parse_boundary(to_string(b)), b);
  }
  EXPECT_EQ(display_name(Language::zh_hk), "Cantonese");
  EXPECT_THROW(parse_language("fr"), Error);
}

TEST(Time, FormatsAndParsesUtc) {
  Timestamp t = parse_timestamp("2026-04-01T09:30:00Z");
  EXPECT_EQ(format_timestamp(t), "2026-04-01T09:30:00Z");
  EXPECT_EQ(format_timestamp(t + std::chrono::hours(24)), "2026-04-02T09:30:00Z");
  EXPECT_THROW(parse_timestamp("yesterday"), Error);
}

TEST(Versions, CompareNumerically) {
  EXPECT_GT(compare_versions("v1.10", "v1.9"), 0);
  EXPECT_LT(compare_versions("tpl-2", "tpl-10"), 0);
  EXPECT_EQ(compare_versions("v3", "v3"), 0);
  EXPECT_LT(compare_versions("", "v1"), 0);
}

TEST(Csv, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv::escape_field("plain"), "plain");
  EXPECT_EQ(csv::escape_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::escape_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv::escape_field("x", true), "\"x\"");
}

TEST(Csv, ParsesEmbeddedNewlinesAndBom) {
  csv::Table t = csv::parse("\xEF\xBB\xBF" "a,b\r\n1,\"two\nlines\"\r\n\r\n3,\"q\"\"x\"\n");
  ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "two\nlines");
  EXPECT_EQ(t.rows[1][1], "q\"x");
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_EQ(t.column("zz"), csv::npos);
}

TEST(Csv, UnterminatedQuoteIsAnInvalidRow) {
  try {
    csv::parse("a\n\"open\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_row);
  }
}

TEST(Csv, WriteThenParseIsIdentityOnRandomTables) {
  std::mt19937 rng(7);
  const std::string alphabet = "ab,\"\n \r\xE4\xB8\xAD";
  for (int iter = 0; iter < 200; ++iter) {
    csv::Table t;
    std::size_t cols = 1 + rng() % 4;
    for (std::size_t c = 0; c < cols; ++c) t.header.push_back("h" + std::to_string(c));
    std::size_t rows = rng() % 5;
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<std::string> row;
      for (std::size_t c = 0; c < cols; ++c) {
        std::string f;
        std::size_t len = rng() % 6;
        for (std::size_t k = 0; k < len; ++k) f += alphabet[rng() % alphabet.size()];
        row.push_back(f);
      }
      // A row of one empty field is indistinguishable from a blank line.
      if (cols == 1 && row[0].empty()) row[0] = "x";
      t.rows.push_back(row);
    }
    csv::Table back = csv::parse(csv::write(t, iter % 2 == 0));
    EXPECT_EQ(back.header, t.header);
    EXPECT_EQ(back.rows, t.rows);
  }
}

// Oracle: half-up rounding decided by comparing twice the remainder with the
// divisor, independent of the closed form used by ExactMean.
std::string round2_oracle(std::int64_t sum, std::int64_t count) {
  std::int64_t q = (100 * sum) / count;
  std::int64_t rem = 100 * sum - q * count;
  if (2 * rem >= count) ++q;
  std::string frac = std::to_string(q % 100);
  if (frac.size() < 2) frac = "0" + frac;
  return std::to_string(q / 100) + "." + frac;
}

TEST(ExactMean, RoundsHalfUp) {
  EXPECT_EQ((ExactMean{36, 27}).round2(), "1.33");
  EXPECT_EQ((ExactMean{1875, 81}).round2(), "23.15");
  EXPECT_EQ((ExactMean{1, 8}).round2(), "0.13");
  EXPECT_EQ((ExactMean{39, 2}).round2(), "19.50");
  EXPECT_EQ((ExactMean{0, 0}).round2(), "0.00");
}

TEST(ExactMean, AgreesWithOracle) {
  for (std::int64_t count = 1; count <= 90; ++count) {
    for (std::int64_t sum = 0; sum <= 24 * count; sum += 1 + count / 7) {
      ASSERT_EQ((ExactMean{sum, count}).round2(), round2_oracle(sum, count))
          << sum << "/" << count;
    }
  }
}

}  // namespace
}  // namespace treval
