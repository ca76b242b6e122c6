#include "vadelta/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "vadelta/error.hpp"

namespace vadelta::csv {

std::string formatDouble(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw NumericError("cannot format double");
  return std::string(buf, end);
}

double parseDouble(std::string_view field) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw IoError("malformed number '" + std::string(field) + "'");
  return v;
}

long long parseInt(std::string_view field) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw IoError("malformed integer '" + std::string(field) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw IoError(source.string() + ": missing column '" + std::string(name) +
                "'");
}

Table readTable(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Table t;
  t.source = path;
  std::string line;
  bool first = true;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (first) {
      for (auto f : fields) t.header.emplace_back(f);
      first = false;
      continue;
    }
    if (fields.size() != t.header.size())
      throw IoError(path.string() + ":" + std::to_string(lineNo) +
                    ": expected " + std::to_string(t.header.size()) +
                    " fields, got " + std::to_string(fields.size()));
    std::vector<std::string> row;
    row.reserve(fields.size());
    for (auto f : fields) row.emplace_back(f);
    t.rows.push_back(std::move(row));
  }
  if (first) throw IoError(path.string() + ": empty file (no header)");
  return t;
}

void writeText(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec)
      throw IoError("cannot create directory " +
                    path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace vadelta::csv
