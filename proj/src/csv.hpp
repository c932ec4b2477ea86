#pragma once

// Minimal comma-separated reading/writing helpers shared by the loaders.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "dabid/common.hpp"

namespace dabid::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;
};

Table read(const std::filesystem::path& path, const std::vector<std::string>& expected_header);

int to_int(const std::string& field, const std::string& where);
double to_double(const std::string& field, const std::string& where);

// Shortest representation that parses back to the same double.
std::string format(double value);

std::ofstream open_output(const std::filesystem::path& path);

}  // namespace dabid::csv
