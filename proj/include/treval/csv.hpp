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

#ifndef TREVAL_CSV_HPP_
#define TREVAL_CSV_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace treval::csv {

// A parsed delimited file: the header row plus data rows. Rows keep their
// 1-based data row index for diagnostics.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position, or npos when the header lacks it.
  std::size_t column(std::string_view name) const;
};

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

// RFC 4180: comma-delimited, double-quote escaping, CRLF or LF line endings,
// embedded newlines inside quoted fields. A leading UTF-8 BOM is skipped.
// Throws Error(Errc::invalid_row) on an unterminated quote.
Table parse(std::string_view text);

// Quotes every field that needs it. `quote_all` quotes every field.
std::string write(const Table& table, bool quote_all = false);

std::string escape_field(std::string_view field, bool force_quote = false);

}  // namespace treval::csv

#endif  // TREVAL_CSV_HPP_
