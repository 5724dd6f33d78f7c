#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace phonocard::detail {

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

/// Writes to "<path>.tmp" and renames over `path`, so readers never see a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
    }
}

inline void put_f32(std::string& out, float f) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(f));
    std::memcpy(&bits, &f, sizeof(bits));
    put_u32(out, bits);
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline float get_f32(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32(p);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

} // namespace phonocard::detail
