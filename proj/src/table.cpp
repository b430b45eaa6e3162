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

#include "station/table.hpp"

#include <cctype>
#include <charconv>
#include <set>

#include "station/common.hpp"

namespace station {

std::string_view dtype_name(DType t) {
  switch (t) {
    case DType::kText: return "text";
    case DType::kNumber: return "number";
    case DType::kDate: return "date";
  }
  return "text";
}

std::optional<DType> parse_dtype(std::string_view name) {
  if (name == "text") return DType::kText;
  if (name == "number") return DType::kNumber;
  if (name == "date") return DType::kDate;
  return std::nullopt;
}

std::optional<std::size_t> Table::column_index(std::string_view name) const {
  const auto wanted = normalize_name(name);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (normalize_name(header[i]) == wanted) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Table::column(std::size_t index) const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(index));
  return out;
}

Table parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A lone empty field is a blank line.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      end_record();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) throw Error(ErrorCode::kMalformedCsv, "unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();

  if (records.empty()) throw Error(ErrorCode::kMalformedCsv, "missing header row");

  Table table;
  table.header = std::move(records.front());
  std::set<std::string> seen;
  for (const auto& h : table.header) {
    if (trim(h).empty()) throw Error(ErrorCode::kMalformedCsv, "empty header name");
    if (!seen.insert(normalize_name(h)).second) {
      throw Error(ErrorCode::kMalformedCsv, "duplicate header: " + h);
    }
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw Error(ErrorCode::kMalformedCsv,
                  "row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                      " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

namespace {

void write_field(std::string& out, const std::string& f) {
  bool quote = f.find_first_of(",\"\r\n") != std::string::npos;
  if (!quote) {
    out += f;
    return;
  }
  out.push_back('"');
  for (char c : f) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

void write_record(std::string& out, const std::vector<std::string>& rec) {
  for (std::size_t i = 0; i < rec.size(); ++i) {
    if (i) out.push_back(',');
    write_field(out, rec[i]);
  }
  out.push_back('\n');
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

bool valid_date(int y, int m, int d) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (y < 1 || m < 1 || m > 12 || d < 1) return false;
  int limit = kDays[m - 1] + (m == 2 && leap(y) ? 1 : 0);
  return d <= limit;
}

int digits_value(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

bool all_digits(std::string_view s) {
  for (char c : s) {
    if (!is_digit(c)) return false;
  }
  return !s.empty();
}

std::string iso(int y, int m, int d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return buf;
}

}  // namespace

std::string write_csv(const Table& table) {
  std::string out;
  write_record(out, table.header);
  for (const auto& r : table.rows) write_record(out, r);
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t int_digits = 0, frac_digits = 0;
  while (i < s.size() && is_digit(s[i])) ++i, ++int_digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < s.size() && is_digit(s[i])) ++i, ++exp_digits;
    if (exp_digits == 0) return std::nullopt;
  }
  if (i != s.size()) return std::nullopt;
  std::string_view body = s;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
  if (ec != std::errc() || ptr != body.data() + body.size()) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  if (v == 0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::optional<std::string> parse_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = s.substr(0, 4), m = s.substr(5, 2), d = s.substr(8, 2);
  if (!all_digits(y) || !all_digits(m) || !all_digits(d)) return std::nullopt;
  int yi = digits_value(y), mi = digits_value(m), di = digits_value(d);
  if (!valid_date(yi, mi, di)) return std::nullopt;
  return iso(yi, mi, di);
}

std::optional<std::string> parse_us_date(std::string_view s) {
  auto parts = split(s, '/');
  if (parts.size() != 3) return std::nullopt;
  const auto& m = parts[0];
  const auto& d = parts[1];
  const auto& y = parts[2];
  if (m.empty() || m.size() > 2 || d.empty() || d.size() > 2 || y.size() != 4) return std::nullopt;
  if (!all_digits(m) || !all_digits(d) || !all_digits(y)) return std::nullopt;
  int yi = digits_value(y), mi = digits_value(m), di = digits_value(d);
  if (!valid_date(yi, mi, di)) return std::nullopt;
  return iso(yi, mi, di);
}

DType infer_dtype(const std::vector<std::string>& values) {
  bool any = false, all_number = true, all_date = true;
  for (const auto& raw : values) {
    auto v = trim(raw);
    if (v.empty()) continue;
    any = true;
    if (all_number && !parse_number(v)) all_number = false;
    if (all_date && !parse_iso_date(v) && !parse_us_date(v)) all_date = false;
    if (!all_number && !all_date) break;
  }
  if (!any) return DType::kText;
  if (all_number) return DType::kNumber;
  if (all_date) return DType::kDate;
  return DType::kText;
}

std::vector<ColumnSpec> infer_schema(const Table& table) {
  std::vector<ColumnSpec> out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out.push_back({table.header[i], infer_dtype(table.column(i))});
  }
  return out;
}

std::string normalize_value(std::string_view value, DType dtype) {
  auto v = trim(value);
  switch (dtype) {
    case DType::kNumber:
      if (auto n = parse_number(v)) return format_number(*n);
      break;
    case DType::kDate:
      if (auto d = parse_iso_date(v)) return *d;
      if (auto d = parse_us_date(v)) return *d;
      break;
    case DType::kText:
      break;
  }
  return to_lower(v);
}

}  // namespace station
