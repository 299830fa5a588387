#pragma once

///
/// @file csv.hpp
///
/// Minimal comma-separated reader and writer: header row, optional double
/// quotes with "" escapes, LF or CRLF line ends, UTF-8 passed through.
///

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blinkscope/error.hpp"

namespace blinkscope::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }

  std::size_t require_column(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw MissingColumn(std::string(name));
  }

  /// Cell text, or empty when the row is short.
  std::string_view cell(std::size_t row, std::size_t col) const {
    const auto& r = rows[row];
    return col < r.size() ? std::string_view(r[col]) : std::string_view();
  }
};

inline Table parse(std::string_view text) {
  Table table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool header_done = false;
  bool any_content = false;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (!header_done) {
        table.header = std::move(record);
        header_done = true;
      } else {
        table.rows.push_back(std::move(record));
      }
    }
    record.clear();
    any_content = false;
  };

  std::size_t i = 0;
  // skip a UTF-8 byte order mark
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        any_content = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        any_content = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        any_content = true;
    }
  }
  if (in_quotes) throw InputError("unterminated quoted CSV field");
  if (any_content || !field.empty() || !record.empty()) end_record();
  if (!header_done) throw InputError("CSV input has no header row");
  return table;
}

inline Table read(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

/// Parses a numeric cell. Empty (after trimming blanks) gives nullopt;
/// anything unparsable is an error.
inline std::optional<double> parse_number(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec == std::errc() && ptr == cell.data() + cell.size()) return v;
  // from_chars rejects some spellings of special values
  std::string lower;
  for (char c : cell) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "nan" || lower == "-nan") return std::nan("");
  if (lower == "inf" || lower == "infinity") return HUGE_VAL;
  if (lower == "-inf" || lower == "-infinity") return -HUGE_VAL;
  throw InputError("not a number: '" + std::string(cell) + "'");
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Decimal text with `digits` significant digits.
inline std::string number(double v, int digits = 9) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

class Writer {
public:
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ += ',';
      out_ += quote(fields[i]);
    }
    out_ += '\n';
  }

  const std::string& str() const { return out_; }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

}  // namespace blinkscope::csv
