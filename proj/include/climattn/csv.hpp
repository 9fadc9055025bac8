#pragma once

// Minimal delimited-text reader/writer (RFC 4180 quoting, comma separator).
// Every diagnostic carries the source name and the 1-based line number.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "climattn/error.hpp"

namespace climattn::csv {

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

class Table {
 public:
  Table() = default;

  static Table parse(std::string_view text, std::string source) {
    Table table;
    table.source_ = std::move(source);
    std::vector<Row> records;
    Row current;
    std::string field;
    bool in_quotes = false;
    bool field_quoted = false;
    std::size_t line = 1;
    current.line = 1;

    auto end_field = [&] {
      current.fields.push_back(std::move(field));
      field.clear();
      field_quoted = false;
    };
    auto end_record = [&] {
      end_field();
      bool blank = current.fields.size() == 1 && current.fields[0].empty();
      if (!blank) records.push_back(std::move(current));
      current = Row{};
      current.line = line;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
      char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
        }
        continue;
      }
      switch (c) {
        case '"':
          if (!field.empty() || field_quoted) {
            throw InputError(table.source_ + ":" + std::to_string(line) +
                             ": stray quote inside unquoted field");
          }
          in_quotes = true;
          field_quoted = true;
          break;
        case ',':
          end_field();
          break;
        case '\r':
          break;
        case '\n':
          ++line;
          end_record();
          break;
        default:
          field.push_back(c);
      }
    }
    if (in_quotes) {
      throw InputError(table.source_ + ":" + std::to_string(current.line) +
                       ": unterminated quoted field");
    }
    if (!field.empty() || !current.fields.empty() || field_quoted) end_record();

    if (records.empty()) {
      throw InputError(table.source_ + ": empty file (no header)");
    }
    table.header_ = std::move(records.front().fields);
    records.erase(records.begin());
    for (const auto& r : records) {
      if (r.fields.size() != table.header_.size()) {
        throw InputError(table.source_ + ":" + std::to_string(r.line) + ": expected " +
                         std::to_string(table.header_.size()) + " fields, found " +
                         std::to_string(r.fields.size()));
      }
    }
    table.rows_ = std::move(records);
    return table;
  }

  static Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path + ": cannot open file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path);
  }

  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }

  bool has_column(std::string_view name) const {
    for (const auto& h : header_)
      if (h == name) return true;
    return false;
  }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    throw InputError(source_ + ":1: missing column '" + std::string(name) + "'");
  }

  void require_columns(std::initializer_list<std::string_view> names) const {
    for (auto name : names) (void)column(name);
  }

  double real(const Row& row, std::size_t col) const {
    const std::string& text = row.fields[col];
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
      throw InputError(where(row, col) + ": expected a finite number, found '" + text + "'");
    }
    return value;
  }

  long long integer(const Row& row, std::size_t col) const {
    const std::string& text = row.fields[col];
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      throw InputError(where(row, col) + ": expected an integer, found '" + text + "'");
    }
    return value;
  }

  std::string where(const Row& row, std::size_t col) const {
    return source_ + ":" + std::to_string(row.line) + ": column '" + header_[col] + "'";
  }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

/// Shortest text that parses back to exactly the same double.
inline std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

/// Fixed significant-digit rendering for human-facing reports.
inline std::string format_real(double value, int significant) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant, value);
  return buf;
}

inline std::string escape(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace climattn::csv
