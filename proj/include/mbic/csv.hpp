#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mbic/types.hpp"

namespace mbic {

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_u64(std::uint64_t v) { return std::to_string(v); }

// Raw CSV: comma separator, header row, LF newlines (CR tolerated on read),
// no quoting (fields here are numeric or simple identifiers).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline CsvTable read_csv(std::string_view text, std::string_view source = "csv") {
  CsvTable t;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) {
      auto fields = split_csv_line(line);
      if (t.header.empty()) {
        t.header = std::move(fields);
      } else {
        if (fields.size() != t.header.size()) {
          throw input_error(std::string(source) + ": row " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(fields));
      }
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  if (t.header.empty()) throw input_error(std::string(source) + ": empty file");
  return t;
}

inline double parse_double_field(std::string_view field, std::string_view source, std::size_t row,
                                 std::string_view col_name) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || field.empty()) {
    throw input_error(std::string(source) + ": row " + std::to_string(row) + ", column '" +
                      std::string(col_name) + "': not a number: '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) {
    throw input_error(std::string(source) + ": row " + std::to_string(row) + ", column '" +
                      std::string(col_name) + "': non-finite value");
  }
  return v;
}

// A numeric dataset: named columns over a dense matrix.
struct NumericDataset {
  std::vector<std::string> names;
  Matrix values;  // rows x columns
};

inline NumericDataset parse_numeric_csv(const CsvTable& t, std::string_view source = "csv") {
  NumericDataset d;
  d.names = t.header;
  d.values.resize(static_cast<Eigen::Index>(t.rows.size()),
                  static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      // Data rows start at line 2 (after the header).
      d.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_double_field(t.rows[r][c], source, r + 2, t.header[c]);
    }
  }
  return d;
}

}  // namespace mbic
