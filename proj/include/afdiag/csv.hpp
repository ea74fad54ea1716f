#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace afdiag::csv {

/// A data row together with its 1-based line number in the source file.
struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Position of `name` in the header; throws ParseError on line 1 if absent.
  std::size_t column(std::string_view name) const;
};

/// Comma-separated, one header line, blank lines skipped, a leading UTF-8
/// byte-order mark and trailing CR tolerated. No quoting.
Table read(const std::filesystem::path& path);

double parse_double(std::string_view text, std::size_t line);
long long parse_int(std::string_view text, std::size_t line);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace afdiag::csv
