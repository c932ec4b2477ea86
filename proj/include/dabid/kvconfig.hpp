#pragma once

// Flat `key = value` documents with `#` comments.

#include <filesystem>
#include <map>
#include <string>

namespace dabid {

using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(const std::filesystem::path& path);
KeyValues parse_key_values(const std::string& text);
void write_key_values(const std::filesystem::path& path, const KeyValues& values);

}  // namespace dabid
