#include "csv.hpp"

#include <cmath>
#include <sstream>

namespace dabid::csv {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string{} : f.substr(first, last - first + 1);
  }
  return fields;
}

}  // namespace

Table read(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
  std::ifstream in(path);
  if (!in) {
    throw MissingArtifactError("cannot open " + path.string());
  }
  Table table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line);
    if (table.header.empty()) {
      if (fields != expected_header) {
        std::string expected;
        for (const auto& h : expected_header) expected += (expected.empty() ? "" : ",") + h;
        throw SchemaError(path.filename().string() + ": expected header '" + expected + "'");
      }
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != expected_header.size()) {
      throw SchemaError(path.filename().string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(expected_header.size()) + " fields");
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) {
    throw SchemaError(path.filename().string() + ": empty file");
  }
  return table;
}

int to_int(const std::string& field, const std::string& where) {
  int value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(where + ": expected an integer, got '" + field + "'");
  }
  return value;
}

double to_double(const std::string& field, const std::string& where) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ParseError(where + ": expected a number, got '" + field + "'");
  }
  return value;
}

std::string format(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  return out;
}

}  // namespace dabid::csv
