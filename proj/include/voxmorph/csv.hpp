#pragma once

#include <algorithm>
#include <charconv>
#include <optional>
#include <string>
#include <vector>

#include "voxmorph/errors.hpp"

namespace voxmorph {

struct CsvRow {
  std::vector<std::string> fields;
  int line = 0; // 1-based source line, for error reporting
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

// RFC-4180-style fields (quoted fields may contain commas, quotes double up);
// blank lines and lines whose first byte is '#' are skipped, so writers can
// carry provenance comments.
inline CsvTable parse_csv_text(const std::string& text) {
  CsvTable table;
  std::size_t i = 0;
  const std::size_t n = text.size();
  int line = 1;
  bool have_header = false;

  while (i < n) {
    if (text[i] == '\n') { ++line; ++i; continue; }
    if (text[i] == '\r' && i + 1 < n && text[i + 1] == '\n') { ++line; i += 2; continue; }
    if (text[i] == '#') { // comment line
      while (i < n && text[i] != '\n') ++i;
      continue;
    }
    CsvRow row;
    row.line = line;
    std::string field;
    bool in_quotes = false;
    bool done = false;
    while (!done) {
      if (i >= n) {
        if (in_quotes)
          throw Error(ErrorKind::format,
                      "line " + std::to_string(row.line) + ": unterminated quote");
        row.fields.push_back(std::move(field));
        done = true;
        break;
      }
      char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && text[i + 1] == '"') { field += '"'; i += 2; }
          else { in_quotes = false; ++i; }
        } else {
          if (c == '\n') ++line;
          field += c;
          ++i;
        }
      } else if (c == '"' && field.empty()) {
        in_quotes = true;
        ++i;
      } else if (c == ',') {
        row.fields.push_back(std::move(field));
        field.clear();
        ++i;
      } else if (c == '\n' || (c == '\r' && i + 1 < n && text[i + 1] == '\n')) {
        row.fields.push_back(std::move(field));
        i += c == '\r' ? 2 : 1;
        ++line;
        done = true;
      } else {
        field += c;
        ++i;
      }
    }
    if (!have_header) {
      table.header = std::move(row.fields);
      have_header = true;
    } else {
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

// Header lookup that reports missing required columns by name.
class ColumnMap {
 public:
  explicit ColumnMap(const std::vector<std::string>& header) : header_(header) {}

  std::optional<int> find(const std::string& name) const {
    auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) return std::nullopt;
    return static_cast<int>(it - header_.begin());
  }

  int require(const std::string& name) const {
    auto idx = find(name);
    if (!idx)
      throw Error(ErrorKind::schema, "missing required column: " + name);
    return *idx;
  }

 private:
  const std::vector<std::string>& header_;
};

namespace detail {

inline const std::string& csv_field(const CsvRow& row, int col) {
  if (col < 0 || static_cast<std::size_t>(col) >= row.fields.size())
    throw Error(ErrorKind::row,
                "line " + std::to_string(row.line) + ": too few fields");
  return row.fields[static_cast<std::size_t>(col)];
}

inline double csv_double(const CsvRow& row, int col, const std::string& name) {
  const std::string& f = csv_field(row, col);
  double v = 0.0;
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || p != f.data() + f.size())
    throw Error(ErrorKind::row, "line " + std::to_string(row.line) +
                                    ": malformed number in " + name + ": '" + f + "'");
  return v;
}

inline std::optional<double> csv_opt_double(const CsvRow& row, int col,
                                            const std::string& name) {
  if (csv_field(row, col).empty()) return std::nullopt;
  return csv_double(row, col, name);
}

inline long long csv_int(const CsvRow& row, int col, const std::string& name) {
  const std::string& f = csv_field(row, col);
  long long v = 0;
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || p != f.data() + f.size())
    throw Error(ErrorKind::row, "line " + std::to_string(row.line) +
                                    ": malformed integer in " + name + ": '" + f + "'");
  return v;
}

inline std::optional<long long> csv_opt_int(const CsvRow& row, int col,
                                            const std::string& name) {
  if (csv_field(row, col).empty()) return std::nullopt;
  return csv_int(row, col, name);
}

// semicolon-separated list field
inline std::vector<std::string> csv_list(const CsvRow& row, int col) {
  const std::string& f = csv_field(row, col);
  std::vector<std::string> out;
  if (f.empty()) return out;
  std::size_t start = 0;
  while (true) {
    std::size_t sep = f.find(';', start);
    if (sep == std::string::npos) {
      out.push_back(f.substr(start));
      break;
    }
    out.push_back(f.substr(start, sep - start));
    start = sep + 1;
  }
  return out;
}

// Quotes a value only when the CSV dialect requires it.
inline std::string csv_escape(const std::string& s) {
  bool needs = s.find_first_of(",\"\n\r") != std::string::npos ||
               (!s.empty() && s.front() == '#');
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

} // namespace detail

} // namespace voxmorph
