#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace phonocard {

namespace detail {
struct RealFft;
}

struct MfccConfig {
    std::size_t frame_len = 256;
    std::size_t hop = 128;
    std::size_t fft_len = 256;
    std::size_t n_mels = 26;
    std::size_t n_coeffs = 13;
    double f_min = 0.0;
    double f_max = 500.0;
    double log_floor = 1e-10;

    void validate(double sample_rate) const;
    /// 1 + floor((length - frame_len) / hop), or 0 when length < frame_len.
    std::size_t frames_for(std::size_t length) const;

    /// "key = value" lines in a fixed order; identical configs give identical text.
    std::string to_text() const;
    static MfccConfig from_map(const std::map<std::string, std::string>& kv);

    bool operator==(const MfccConfig&) const = default;
};

/// Mel(f) = 2595 * log10(1 + f / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters with mel-equally-spaced centres between f_min and
/// f_max. Weights are laid out n_mels x (fft_len / 2 + 1), row-major; each
/// row peaks at exactly 1.
struct MelFilterbank {
    std::size_t n_mels = 0;
    std::size_t n_bins = 0;
    std::vector<double> center_hz;
    std::vector<double> weights;

    double at(std::size_t mel, std::size_t bin) const { return weights[mel * n_bins + bin]; }
};

MelFilterbank mel_filterbank(const MfccConfig& config, double sample_rate);

/// Frames x coefficients, row-major.
struct MfccMatrix {
    std::size_t frames = 0;
    std::size_t coeffs = 0;
    std::vector<double> values;
    std::vector<double> frame_times;

    double at(std::size_t frame, std::size_t coeff) const { return values[frame * coeffs + coeff]; }
};

/// Orthonormal DCT-II and its inverse (the transpose, a DCT-III).
std::vector<double> dct2_orthonormal(std::span<const double> x);
std::vector<double> dct2_orthonormal_inverse(std::span<const double> c);

/// Symmetric Hamming window.
std::vector<double> hamming_window(std::size_t length);

/// |DFT|^2 of `frame` zero-padded to fft_len, bins 0..fft_len/2.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_len);

/// Reusable extractor: filterbank, window and DCT basis are built once and
/// shared read-only across calls.
class MfccExtractor {
public:
    MfccExtractor(const MfccConfig& config, double sample_rate);
    ~MfccExtractor();
    MfccExtractor(const MfccExtractor&) = delete;
    MfccExtractor& operator=(const MfccExtractor&) = delete;

    MfccMatrix operator()(std::span<const double> samples) const;

    const MfccConfig& config() const { return config_; }
    const MelFilterbank& filterbank() const { return bank_; }

private:
    MfccConfig config_;
    double sample_rate_;
    MelFilterbank bank_;
    std::vector<double> window_;
    std::vector<double> dct_;  // n_coeffs x n_mels
    std::unique_ptr<detail::RealFft> fft_;
};

/// Hamming window, power spectrum, mel energies, log(E + log_floor),
/// orthonormal DCT-II, first n_coeffs coefficients.
MfccMatrix mfcc(std::span<const double> samples, const MfccConfig& config, double sample_rate);

} // namespace phonocard
