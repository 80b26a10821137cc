#pragma once

#include "chaos_mgrit/types.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace chaos_mgrit {

using CsvTable = std::vector<std::vector<std::string>>;

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("not a number: '" + std::string(s) + "'");
  return x;
}

namespace detail {
inline void append_cell(std::string& out, const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) {
    out += cell;
    return;
  }
  out += '"';
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}
}  // namespace detail

/// RFC 4180 style: cells with separators or quotes are quoted, rows end in '\n'.
inline std::string to_csv(const CsvTable& table) {
  std::string out;
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      detail::append_cell(out, row[c]);
    }
    out += '\n';
  }
  return out;
}

inline CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool row_open = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        row_open = true;
        break;
      case ',':
        row.push_back(std::move(cell));
        cell.clear();
        row_open = true;
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(cell));
        cell.clear();
        table.push_back(std::move(row));
        row.clear();
        row_open = false;
        break;
      default:
        cell += c;
        row_open = true;
    }
  }
  if (quoted) throw ConfigError("unterminated quoted CSV cell");
  if (row_open) {
    row.push_back(std::move(cell));
    table.push_back(std::move(row));
  }
  return table;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw ConfigError("failed writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace chaos_mgrit
