// Copyright 2026 The Data Station Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace station {

enum class DType { kText, kNumber, kDate };

std::string_view dtype_name(DType t);
std::optional<DType> parse_dtype(std::string_view name);

struct ColumnSpec {
  std::string name;
  DType dtype = DType::kText;

  bool operator==(const ColumnSpec&) const = default;
};

/// Rectangular text table: a header row plus data rows of equal width.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column by normalized name, if present.
  std::optional<std::size_t> column_index(std::string_view name) const;
  std::vector<std::string> column(std::size_t index) const;

  bool operator==(const Table&) const = default;
};

/// RFC 4180 parsing (quoted fields, doubled quotes, CRLF or LF). Throws
/// Error(MalformedCsv) for a missing header, duplicate header names
/// (case-insensitive), unequal row widths, or an unterminated quote.
Table parse_csv(std::string_view text);
std::string write_csv(const Table& table);

/// Strict decimal: optional sign, digits with optional fraction, optional
/// exponent. Surrounding whitespace is not accepted.
std::optional<double> parse_number(std::string_view s);
/// Shortest round-trip rendering of a double.
std::string format_number(double v);

/// YYYY-MM-DD with calendar validation; returns the same text.
std::optional<std::string> parse_iso_date(std::string_view s);
/// MM/DD/YYYY with calendar validation; returns YYYY-MM-DD.
std::optional<std::string> parse_us_date(std::string_view s);

/// Column typing rule: number if every non-empty value parses as a decimal,
/// date if every non-empty value is ISO or US formatted, text otherwise.
/// An all-empty column is text.
DType infer_dtype(const std::vector<std::string>& values);
std::vector<ColumnSpec> infer_schema(const Table& table);

/// Canonical comparison form used by sketches and profiles: trimmed; text is
/// lowercased, numbers re-rendered, dates rewritten as YYYY-MM-DD.
std::string normalize_value(std::string_view value, DType dtype);

}  // namespace station
