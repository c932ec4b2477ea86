#include "kv.hpp"

#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "dabid/common.hpp"

namespace dabid {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues values;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return values;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw MissingArtifactError("cannot open config " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

void write_key_values(const std::filesystem::path& path, const KeyValues& values) {
  auto out = csv::open_output(path);
  for (const auto& [key, value] : values) out << key << " = " << value << '\n';
}

namespace kv {

void read(const KeyValues& values, const std::string& key, double& out) {
  if (auto it = values.find(key); it != values.end()) out = csv::to_double(it->second, key);
}

void read(const KeyValues& values, const std::string& key, int& out) {
  if (auto it = values.find(key); it != values.end()) out = csv::to_int(it->second, key);
}

void read(const KeyValues& values, const std::string& key, long& out) {
  if (auto it = values.find(key); it != values.end()) {
    // Accept 4500000 as well as 4.5e6.
    const double v = csv::to_double(it->second, key);
    out = static_cast<long>(v);
    if (static_cast<double>(out) != v) throw ParseError(key + ": expected an integer");
  }
}

void read(const KeyValues& values, const std::string& key, bool& out) {
  if (auto it = values.find(key); it != values.end()) {
    const auto& v = it->second;
    if (v == "true" || v == "True" || v == "1") {
      out = true;
    } else if (v == "false" || v == "False" || v == "0") {
      out = false;
    } else {
      throw ParseError(key + ": expected true/false, got '" + v + "'");
    }
  }
}

void read(const KeyValues& values, const std::string& key, std::string& out) {
  if (auto it = values.find(key); it != values.end()) out = it->second;
}

void read(const KeyValues& values, const std::string& key, std::vector<double>& out) {
  if (auto it = values.find(key); it != values.end()) {
    out.clear();
    for (const auto& item : split_list(it->second)) out.push_back(csv::to_double(item, key));
  }
}

void read(const KeyValues& values, const std::string& key, std::uint64_t& out) {
  if (auto it = values.find(key); it != values.end()) {
    const int v = csv::to_int(it->second, key);
    if (v < 0) throw ParseError(key + ": seeds must be nonnegative");
    out = static_cast<std::uint64_t>(v);
  }
}

void read(const KeyValues& values, const std::string& key, std::vector<std::uint64_t>& out) {
  if (auto it = values.find(key); it != values.end()) {
    out.clear();
    for (const auto& item : split_list(it->second)) {
      const int v = csv::to_int(item, key);
      if (v < 0) throw ParseError(key + ": seeds must be nonnegative");
      out.push_back(static_cast<std::uint64_t>(v));
    }
  }
}

}  // namespace kv
}  // namespace dabid
