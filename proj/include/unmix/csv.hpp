#pragma once

/**
 * @file
 * @brief Plain numeric CSV: comma-delimited, period decimal separator.
 *
 * Values are written with 17 significant digits so that reading them back
 * reproduces the binary64 value exactly.
 */

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "unmix/model.hpp"

namespace unmix::csv {

namespace detail {

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) { s.remove_prefix(1); }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double parse_number(std::string_view field, std::size_t line, std::size_t column)
{
  field = trim(field);
  if (!field.empty() && field.front() == '+') { field.remove_prefix(1); }
  double value = 0.0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || end != field.data() + field.size()) {
    throw UnmixError(
      ErrorCode::ParseError, "line " + std::to_string(line) + ", column " +
                               std::to_string(column) + ": not a number: '" +
                               std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

/// Parse CSV text into a dense matrix. Blank lines are ignored; rows must be equally long.
inline Matrix parse(std::string_view text, bool has_header = false)
{
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    ++line_no;
    if (detail::trim(line).empty()) { continue; }
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::size_t column = 1;
    while (true) {
      const auto comma = line.find(',');
      row.push_back(detail::parse_number(line.substr(0, comma), line_no, column++));
      if (comma == std::string_view::npos) { break; }
      line.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw UnmixError(
        ErrorCode::ParseError, "line " + std::to_string(line_no) + " has " +
                                 std::to_string(row.size()) + " fields, expected " +
                                 std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) { throw UnmixError(ErrorCode::ParseError, "no numeric rows"); }

  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c) { out(r, c) = rows[r][c]; }
  }
  return out;
}

inline Matrix read(const std::string & path, bool has_header = false)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw UnmixError(ErrorCode::ParseError, "cannot open " + path); }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse(buffer.str(), has_header);
  } catch (const UnmixError & e) {
    throw UnmixError(ErrorCode::ParseError, path + ": " + e.what());
  }
}

/// A single row or a single column, as a vector.
inline Vector read_vector(const std::string & path, bool has_header = false)
{
  const Matrix m = read(path, has_header);
  if (m.rows() != 1 && m.cols() != 1) {
    throw UnmixError(
      ErrorCode::DimensionMismatch,
      path + ": expected one row or one column, got " + unmix::detail::dims(m.rows(), m.cols()));
  }
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline std::string format_number(double value)
{
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, ec == std::errc{} ? end : buf);
}

inline std::string format(const Matrix & m, const std::vector<std::string> & header = {})
{
  std::string out;
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) { out += ','; }
      out += header[c];
    }
    out += '\n';
  }
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) { out += ','; }
      out += format_number(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline void write(
  const std::string & path, const Matrix & m, const std::vector<std::string> & header = {})
{
  std::ofstream outf(path, std::ios::binary | std::ios::trunc);
  if (!outf) { throw UnmixError(ErrorCode::ParseError, "cannot write " + path); }
  outf << format(m, header);
  if (!outf) { throw UnmixError(ErrorCode::ParseError, "write failed for " + path); }
}

}  // namespace unmix::csv
