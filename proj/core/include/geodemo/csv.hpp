#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geodemo {

/// A parsed CSV document: one header row plus data rows. Rows are not
/// required to match the header width; callers check that themselves so
/// they can report the offending line.
struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based source line of each row

  std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC 4180 parsing: quoted fields, doubled quotes, embedded newlines, CRLF.
/// A leading UTF-8 BOM is dropped and blank lines are skipped.
CsvDocument parse_csv(std::string_view text);

/// Throws DataError{FileNotFound} when the file cannot be opened.
CsvDocument read_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);

/// Joins escaped fields with commas and terminates with '\n'.
std::string csv_line(const std::vector<std::string>& fields);

/// Shortest representation that round-trips to the same double.
std::string format_number(double value);

/// Fixed-point with `decimals` digits; -0 prints as 0.
std::string format_fixed(double value, int decimals);

/// Parses a decimal number; nullopt on trailing garbage or empty input.
std::optional<double> parse_number(std::string_view text);

std::string trim(std::string_view text);

}  // namespace geodemo
