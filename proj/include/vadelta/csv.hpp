#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vadelta::csv {

/// Shortest text that round-trips to the same double. NaN is written empty.
std::string formatDouble(double v);

double parseDouble(std::string_view field);
long long parseInt(std::string_view field);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

/// A parsed file: header names and rows of raw fields.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws IoError naming the file if absent.
  std::size_t column(std::string_view name) const;
  std::filesystem::path source;
};

Table readTable(const std::filesystem::path& path);

/// Writes text atomically enough for our purposes: truncate then write,
/// surfacing failures with the path.
void writeText(const std::filesystem::path& path, std::string_view text);

}  // namespace vadelta::csv
