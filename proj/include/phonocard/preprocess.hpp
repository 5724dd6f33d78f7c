#pragma once

#include "phonocard/signal_io.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace phonocard {

enum class FilterKind { Bandpass };

struct FilterSpec {
    double low_cut = 25.0;
    double high_cut = 400.0;
    int order = 4;
    FilterKind kind = FilterKind::Bandpass;

    /// Throws ConfigError unless 0 < low < high < fs/2 and order is even, >= 2.
    void validate(double sample_rate) const;
};

inline constexpr std::size_t kCycleLength = 2500;

struct Cycle {
    std::vector<double> samples;
    std::string patient_id;
    std::string record_id;
    Label label = Label::Normal;
    int cycle_index = 0;
};

/// Half-open [starts[i], ends[i]) sample ranges, one per heart cycle.
struct CycleBoundaries {
    std::vector<std::size_t> starts;
    std::vector<std::size_t> ends;

    std::size_t size() const { return starts.size(); }
};

/// Anti-aliased (zero-phase Butterworth at 0.45 * dst_rate) decimation with
/// linear interpolation onto the output grid.
std::vector<double> resample(std::span<const double> samples, int src_rate, int dst_rate);

/// Zero-phase Butterworth band-pass.
std::vector<double> bandpass(std::span<const double> samples, const FilterSpec& spec, double sample_rate);

/// Windowed maximum-absolute-amplitude spike removal over 500 ms windows.
/// While some window's peak exceeds three times the median window peak, the
/// largest spike is zeroed between the zero crossings around it.
std::vector<double> remove_spikes(std::span<const double> samples, double sample_rate);

/// Homomorphic envelope: exp of the 15 Hz low-passed log analytic magnitude.
std::vector<double> homomorphic_envelope(std::span<const double> samples, double sample_rate);

/// S1-onset to next-S1-onset boundaries. Cycles outside [0.3 s, 2.5 s] are
/// dropped.
CycleBoundaries segment_cycles(std::span<const double> samples, double sample_rate);

/// Truncates to `target` samples or right-pads with zeros.
std::vector<double> fix_length(std::span<const double> samples, std::size_t target = kCycleLength);

/// Divide by the peak magnitude (when non-zero) and add 1, giving [0, 2].
std::vector<double> scale_for_conv(std::span<const double> samples);
Cycle scale_for_conv(Cycle cycle);

struct PreprocessConfig {
    int target_rate = 1000;
    FilterSpec filter;
    std::size_t cycle_length = kCycleLength;
};

/// Resample, band-pass, despike, segment and length-normalize one recording.
/// Every cycle inherits the recording's id, patient and label.
std::vector<Cycle> extract_cycles(const Recording& recording, const PreprocessConfig& config = {});

} // namespace phonocard
