#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dabid/kvconfig.hpp"

namespace dabid::kv {

// Each overload leaves `out` untouched when the key is absent and throws
// ParseError when the value does not parse.
void read(const KeyValues& values, const std::string& key, double& out);
void read(const KeyValues& values, const std::string& key, int& out);
void read(const KeyValues& values, const std::string& key, long& out);
void read(const KeyValues& values, const std::string& key, bool& out);
void read(const KeyValues& values, const std::string& key, std::string& out);
void read(const KeyValues& values, const std::string& key, std::vector<double>& out);
void read(const KeyValues& values, const std::string& key, std::uint64_t& out);
void read(const KeyValues& values, const std::string& key, std::vector<std::uint64_t>& out);

}  // namespace dabid::kv
