#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dvicom::csv {

/// Splits one line on commas; double-quoted fields may contain commas and
/// "" escapes.
std::vector<std::string> split(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Round-trip decimal form of a double (17 significant digits).
std::string format_double(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  ///< 1-based source line of each row
  std::vector<std::string> directives;    ///< '#'-prefixed lines, without the '#'

  /// Index of a column; throws DataError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dvicom::csv
