#include "phonocard/config.hpp"

#include "io_util.hpp"
#include "phonocard/error.hpp"

namespace phonocard {

ConfigMap parse_config(std::string_view text) {
    ConfigMap out;
    std::string section;
    std::size_t line_no = 0;
    for (const auto& raw : detail::split(text, '\n')) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find_first_of("#;"); hash != std::string::npos) {
            line.erase(hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
            }
            section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        out[section.empty() ? key : section + "." + key] = detail::trim(std::string_view(line).substr(eq + 1));
    }
    return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
    return parse_config(detail::read_text_file(path));
}

std::string format_config(const ConfigMap& config) {
    std::string top, rest, current;
    for (const auto& [key, value] : config) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) {
            top += key + " = " + value + "\n";
            continue;
        }
        const std::string section = key.substr(0, dot);
        if (section != current) {
            rest += "\n[" + section + "]\n";
            current = section;
        }
        rest += key.substr(dot + 1) + " = " + value + "\n";
    }
    return top + rest;
}

ConfigMap config_section(const ConfigMap& config, const std::string& prefix) {
    ConfigMap out;
    const std::string p = prefix + ".";
    for (const auto& [key, value] : config) {
        if (key.starts_with(p)) {
            out[key.substr(p.size())] = value;
        }
    }
    return out;
}

} // namespace phonocard
