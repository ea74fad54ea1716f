#include "afdiag/csv.hpp"

#include "afdiag/error.hpp"

#include <array>
#include <charconv>
#include <fstream>

namespace afdiag::csv {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw ParseError("missing column '" + std::string(name) + "'", 1);
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  Table table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (lineno == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (trim(view).empty()) continue;
    if (!have_header) {
      table.header = split(view);
      have_header = true;
      continue;
    }
    Row row{lineno, split(view)};
    if (row.fields.size() != table.header.size())
      throw ParseError("expected " + std::to_string(table.header.size()) +
                           " fields, got " + std::to_string(row.fields.size()),
                       lineno);
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError("empty file " + path.string(), 1);
  return table;
}

double parse_double(std::string_view text, std::size_t line) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty())
    throw ParseError("not a number: '" + std::string(text) + "'", line);
  return value;
}

long long parse_int(std::string_view text, std::size_t line) {
  long long value = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty())
    throw ParseError("not an integer: '" + std::string(text) + "'", line);
  return value;
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

}  // namespace afdiag::csv
