#pragma once

#include "phonocard/nn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace phonocard::nn {

struct NamedTensor {
    std::string name;
    Tensor<float> tensor;
};

/// Binary container: "PCGK", u32 version, u32 tensor count, u32 manifest
/// length and manifest text (key=value lines), then per tensor a u32 name
/// length, name, u32 rank, u32 dims and little-endian float32 values.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    std::map<std::string, std::string> manifest;
    std::vector<NamedTensor> tensors;

    const Tensor<float>* find(const std::string& name) const;
    bool operator==(const Checkpoint&) const = default;
};

inline bool operator==(const NamedTensor& a, const NamedTensor& b) {
    return a.name == b.name && a.tensor == b.tensor;
}

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

/// Written to a temporary sibling and renamed into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace phonocard::nn
