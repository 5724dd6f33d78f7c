#pragma once

#include "phonocard/features.hpp"
#include "phonocard/preprocess.hpp"
#include "phonocard/training.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace phonocard {

// Cycle archive: cycles.f32 (little-endian float32, cycle_length values per
// cycle, unscaled) and cycles_index.csv ("record_id,patient_id,label,cycle_index").
void write_cycle_archive(const std::filesystem::path& dir, const std::vector<Cycle>& cycles,
                         std::size_t cycle_length = kCycleLength);
std::vector<Cycle> read_cycle_archive(const std::filesystem::path& dir, std::size_t cycle_length = kCycleLength);

// MFCC archive: mfcc.f32 (frames x coeffs per cycle, row-major, in cycle
// archive order) and mfcc_config.txt (MfccConfig::to_text plus sample rate).
struct MfccArchive {
    MfccConfig config;
    double sample_rate = 1000.0;
    std::size_t frames = 0;
    std::vector<std::vector<float>> matrices;
};

void write_mfcc_archive(const std::filesystem::path& dir, const MfccArchive& archive);
MfccArchive read_mfcc_archive(const std::filesystem::path& dir);

/// Joins cycles with their MFCC matrices (which may be absent).
ExampleSet make_example_set(const std::vector<Cycle>& cycles, const MfccArchive* mfcc,
                            std::size_t cycle_length = kCycleLength);

/// Stable 64-bit FNV-1a digest in hex, used to match feature configs.
std::string config_digest(const std::string& text);

} // namespace phonocard
