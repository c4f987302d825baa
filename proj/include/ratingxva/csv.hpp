#pragma once

// Minimal comma-separated text handling shared by every file format the
// library reads or writes. Numbers are written in shortest round-trip form.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ratingxva/error.hpp"

namespace ratingxva::csv {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Shortest decimal text that parses back to exactly the same double.
/// Infinities are written as "inf" / "-inf".
inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0 as well
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Parses a finite or infinite decimal number; nullopt on any trailing garbage.
inline std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text == "inf" || text == "+inf" || text == "Inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf" || text == "-Inf") return -std::numeric_limits<double>::infinity();
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

/// One logical CSV line with its 1-based line number in the source.
struct Line {
  std::size_t number;
  std::vector<std::string> fields;
};

/// Reads non-blank, non-'#' lines.
inline std::vector<Line> read_lines(std::istream& in) {
  std::vector<Line> lines;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const auto t = trim(raw);
    if (t.empty() || t.front() == '#') continue;
    lines.push_back({number, split(t)});
  }
  return lines;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline double field_number(const std::string& source, const Line& line, std::size_t column) {
  if (column >= line.fields.size())
    throw ParseError(source, line.number, column + 1, "missing field");
  const auto v = parse_number(line.fields[column]);
  if (!v) throw ParseError(source, line.number, column + 1, "not a number: '" + line.fields[column] + "'");
  return *v;
}

}  // namespace ratingxva::csv
