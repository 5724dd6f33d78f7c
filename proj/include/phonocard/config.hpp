#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace phonocard {

/// Flat view of a "key = value" file with optional [section] headers.
/// Keys inside a section are stored as "section.key". '#' and ';' start
/// comments.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::string_view text);
ConfigMap read_config_file(const std::filesystem::path& path);
/// Inverse of parse_config: grouped by section, sorted by key.
std::string format_config(const ConfigMap& config);

/// Keys with `prefix` + "." stripped of the prefix.
ConfigMap config_section(const ConfigMap& config, const std::string& prefix);

} // namespace phonocard
