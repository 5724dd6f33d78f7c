#include "phonocard/features.hpp"

#include "phonocard/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace phonocard {

void MfccConfig::validate(double sample_rate) const {
    auto fail = [](const std::string& what) { throw ConfigError("MFCC config: " + what); };
    if (frame_len == 0 || hop == 0) {
        fail("frame_len and hop must be positive");
    }
    if (hop > frame_len) {
        fail("hop must not exceed frame_len");
    }
    if (fft_len < frame_len || (fft_len & (fft_len - 1)) != 0) {
        fail("fft_len must be a power of two >= frame_len");
    }
    if (n_mels == 0 || n_coeffs == 0 || n_coeffs > n_mels) {
        fail("need 0 < n_coeffs <= n_mels");
    }
    if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0)) {
        fail("need 0 <= f_min < f_max <= sample_rate/2");
    }
    if (!(log_floor > 0.0)) {
        fail("log_floor must be positive");
    }
}

std::size_t MfccConfig::frames_for(std::size_t length) const {
    return length < frame_len ? 0 : 1 + (length - frame_len) / hop;
}

std::string MfccConfig::to_text() const {
    std::ostringstream out;
    out.precision(17);
    out << "frame_len = " << frame_len << "\n"
        << "hop = " << hop << "\n"
        << "fft_len = " << fft_len << "\n"
        << "n_mels = " << n_mels << "\n"
        << "n_coeffs = " << n_coeffs << "\n"
        << "f_min = " << f_min << "\n"
        << "f_max = " << f_max << "\n"
        << "log_floor = " << log_floor << "\n";
    return out.str();
}

MfccConfig MfccConfig::from_map(const std::map<std::string, std::string>& kv) {
    MfccConfig c;
    auto size_of = [&](const char* key, std::size_t& field) {
        if (auto it = kv.find(key); it != kv.end()) {
            field = std::stoul(it->second);
        }
    };
    auto real_of = [&](const char* key, double& field) {
        if (auto it = kv.find(key); it != kv.end()) {
            field = std::stod(it->second);
        }
    };
    try {
        size_of("frame_len", c.frame_len);
        size_of("hop", c.hop);
        size_of("fft_len", c.fft_len);
        size_of("n_mels", c.n_mels);
        size_of("n_coeffs", c.n_coeffs);
        real_of("f_min", c.f_min);
        real_of("f_max", c.f_max);
        real_of("log_floor", c.log_floor);
    } catch (const std::logic_error& e) {
        throw ConfigError(std::string("MFCC config: bad number (") + e.what() + ")");
    }
    return c;
}

double hz_to_mel(double hz) {
    if (!(hz >= 0.0)) {
        throw DomainError("hz_to_mel: frequency must be non-negative");
    }
    return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) {
    if (!(mel >= 0.0)) {
        throw DomainError("mel_to_hz: mel value must be non-negative");
    }
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank mel_filterbank(const MfccConfig& config, double sample_rate) {
    config.validate(sample_rate);
    MelFilterbank bank;
    bank.n_mels = config.n_mels;
    bank.n_bins = config.fft_len / 2 + 1;

    const double mel_lo = hz_to_mel(config.f_min);
    const double step = (hz_to_mel(config.f_max) - mel_lo) / static_cast<double>(config.n_mels + 1);
    std::vector<double> edges(config.n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(mel_lo + step * static_cast<double>(i));
    }
    const double bin_hz = sample_rate / static_cast<double>(config.fft_len);

    bank.center_hz.assign(edges.begin() + 1, edges.end() - 1);
    for (std::size_t m = 1; m < bank.center_hz.size(); ++m) {
        if (std::lround(bank.center_hz[m] / bin_hz) == std::lround(bank.center_hz[m - 1] / bin_hz)) {
            throw ResolutionError("mel filters " + std::to_string(m - 1) + " and " + std::to_string(m) +
                                  " share an FFT bin; lower n_mels or raise fft_len");
        }
    }

    bank.weights.assign(bank.n_mels * bank.n_bins, 0.0);
    for (std::size_t m = 0; m < bank.n_mels; ++m) {
        const double lo = edges[m];
        const double c = edges[m + 1];
        const double hi = edges[m + 2];
        double row_max = 0.0;
        for (std::size_t k = 0; k < bank.n_bins; ++k) {
            const double f = static_cast<double>(k) * bin_hz;
            double w = 0.0;
            if (f >= lo && f <= c) {
                w = (f - lo) / (c - lo);
            } else if (f > c && f <= hi) {
                w = (hi - f) / (hi - c);
            }
            bank.weights[m * bank.n_bins + k] = w;
            row_max = std::max(row_max, w);
        }
        if (!(row_max > 0.0)) {
            throw ResolutionError("mel filter " + std::to_string(m) + " covers no FFT bin");
        }
        for (std::size_t k = 0; k < bank.n_bins; ++k) {
            bank.weights[m * bank.n_bins + k] /= row_max;
        }
    }
    return bank;
}

namespace {

double dct_scale(std::size_t k, std::size_t n) {
    return k == 0 ? std::sqrt(1.0 / static_cast<double>(n)) : std::sqrt(2.0 / static_cast<double>(n));
}

double dct_basis(std::size_t k, std::size_t i, std::size_t n) {
    return dct_scale(k, n) *
           std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                    (2.0 * static_cast<double>(n)));
}

} // namespace

std::vector<double> dct2_orthonormal(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += dct_basis(k, i, n) * x[i];
        }
        out[k] = s;
    }
    return out;
}

std::vector<double> dct2_orthonormal_inverse(std::span<const double> c) {
    const std::size_t n = c.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            s += dct_basis(k, i, n) * c[k];
        }
        out[i] = s;
    }
    return out;
}

std::vector<double> hamming_window(std::size_t length) {
    std::vector<double> w(length, 1.0);
    if (length < 2) {
        return w;
    }
    for (std::size_t i = 0; i < length; ++i) {
        w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(length - 1));
    }
    return w;
}

namespace detail {

struct RealFft {
    std::size_t n;
    fftw_plan plan;

    explicit RealFft(std::size_t len) : n(len) {
        auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
        fftw_free(in);
        fftw_free(out);
    }
    ~RealFft() { fftw_destroy_plan(plan); }

    /// Thread-safe: new-array execution with per-call buffers.
    std::vector<double> power(std::span<const double> frame) const {
        auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
        std::fill(in, in + n, 0.0);
        std::copy_n(frame.begin(), std::min(n, frame.size()), in);
        fftw_execute_dft_r2c(plan, in, out);
        std::vector<double> p(n / 2 + 1);
        for (std::size_t k = 0; k < p.size(); ++k) {
            p[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
        }
        fftw_free(in);
        fftw_free(out);
        return p;
    }
};

} // namespace detail

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_len) {
    return detail::RealFft(fft_len).power(frame);
}

MfccExtractor::MfccExtractor(const MfccConfig& config, double sample_rate)
    : config_(config),
      sample_rate_(sample_rate),
      bank_(mel_filterbank(config, sample_rate)),
      window_(hamming_window(config.frame_len)),
      dct_(config.n_coeffs * config.n_mels),
      fft_(std::make_unique<detail::RealFft>(config.fft_len)) {
    for (std::size_t k = 0; k < config.n_coeffs; ++k) {
        for (std::size_t i = 0; i < config.n_mels; ++i) {
            dct_[k * config.n_mels + i] = dct_basis(k, i, config.n_mels);
        }
    }
}

MfccExtractor::~MfccExtractor() = default;

MfccMatrix MfccExtractor::operator()(std::span<const double> samples) const {
    const auto& c = config_;
    if (samples.size() < c.frame_len) {
        throw SignalTooShort("MFCC input has " + std::to_string(samples.size()) + " samples, frame needs " +
                             std::to_string(c.frame_len));
    }
    MfccMatrix out;
    out.frames = c.frames_for(samples.size());
    out.coeffs = c.n_coeffs;
    out.values.resize(out.frames * out.coeffs);
    out.frame_times.resize(out.frames);

    std::vector<double> frame(c.frame_len);
    std::vector<double> log_energy(c.n_mels);
    for (std::size_t f = 0; f < out.frames; ++f) {
        const std::size_t start = f * c.hop;
        for (std::size_t i = 0; i < c.frame_len; ++i) {
            frame[i] = samples[start + i] * window_[i];
        }
        const auto power = fft_->power(frame);
        for (std::size_t m = 0; m < c.n_mels; ++m) {
            double e = 0.0;
            for (std::size_t k = 0; k < bank_.n_bins; ++k) {
                e += bank_.at(m, k) * power[k];
            }
            log_energy[m] = std::log(e + c.log_floor);
        }
        for (std::size_t k = 0; k < c.n_coeffs; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < c.n_mels; ++i) {
                s += dct_[k * c.n_mels + i] * log_energy[i];
            }
            out.values[f * c.n_coeffs + k] = s;
        }
        out.frame_times[f] = (static_cast<double>(start) + 0.5 * static_cast<double>(c.frame_len)) / sample_rate_;
    }
    return out;
}

MfccMatrix mfcc(std::span<const double> samples, const MfccConfig& config, double sample_rate) {
    return MfccExtractor(config, sample_rate)(samples);
}

} // namespace phonocard
