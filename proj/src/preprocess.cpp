#include "phonocard/preprocess.hpp"

#include "phonocard/dsp.hpp"
#include "phonocard/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace phonocard {

void FilterSpec::validate(double sample_rate) const {
    if (!(low_cut > 0.0 && low_cut < high_cut && high_cut < sample_rate / 2.0)) {
        throw ConfigError("filter cutoffs must satisfy 0 < low_cut < high_cut < sample_rate/2");
    }
    if (order < 2 || order % 2 != 0) {
        throw ConfigError("filter order must be even and at least 2");
    }
}

std::vector<double> resample(std::span<const double> samples, int src_rate, int dst_rate) {
    if (dst_rate <= 0 || src_rate <= 0) {
        throw ConfigError("sample rates must be positive");
    }
    if (src_rate < dst_rate) {
        throw UpsampleUnsupported("cannot resample " + std::to_string(src_rate) + " Hz up to " +
                                  std::to_string(dst_rate) + " Hz");
    }
    if (src_rate == dst_rate || samples.empty()) {
        return {samples.begin(), samples.end()};
    }
    const double ratio = static_cast<double>(src_rate) / dst_rate;
    const auto sos = dsp::butterworth_lowpass(8, 0.45 * dst_rate, src_rate);
    const auto smooth = dsp::sosfiltfilt(sos, samples);

    const auto out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(samples.size()) * dst_rate / static_cast<double>(src_rate)));
    std::vector<double> out(out_len);
    const std::size_t last = smooth.size() - 1;
    for (std::size_t i = 0; i < out_len; ++i) {
        const double pos = static_cast<double>(i) * ratio;
        const auto lo = std::min(static_cast<std::size_t>(pos), last);
        const auto hi = std::min(lo + 1, last);
        const double frac = pos - static_cast<double>(lo);
        out[i] = smooth[lo] + frac * (smooth[hi] - smooth[lo]);
    }
    return out;
}

std::vector<double> bandpass(std::span<const double> samples, const FilterSpec& spec, double sample_rate) {
    spec.validate(sample_rate);
    if (samples.size() < 3 * static_cast<std::size_t>(spec.order)) {
        throw SignalTooShort("band-pass needs at least " + std::to_string(3 * spec.order) + " samples, got " +
                             std::to_string(samples.size()));
    }
    const auto sos = dsp::butterworth_bandpass(spec.order, spec.low_cut, spec.high_cut, sample_rate);
    return dsp::sosfiltfilt(sos, samples);
}

namespace {

double median(std::vector<double> v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

bool crosses_zero(double a, double b) {
    return (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0);
}

} // namespace

std::vector<double> remove_spikes(std::span<const double> samples, double sample_rate) {
    std::vector<double> x(samples.begin(), samples.end());
    const auto win = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.5 * sample_rate)));
    const std::size_t n = x.size();
    const std::size_t n_windows = (n + win - 1) / win;
    if (n_windows < 2) {
        return x;
    }

    auto window_peak = [&](std::size_t w) {
        const std::size_t end = std::min(n, (w + 1) * win);
        double m = 0.0;
        for (std::size_t i = w * win; i < end; ++i) {
            m = std::max(m, std::abs(x[i]));
        }
        return m;
    };

    std::vector<double> peaks(n_windows);
    for (std::size_t w = 0; w < n_windows; ++w) {
        peaks[w] = window_peak(w);
    }

    for (std::size_t iter = 0; iter < n; ++iter) {
        const double threshold = 3.0 * median(peaks);
        const auto worst = static_cast<std::size_t>(
            std::distance(peaks.begin(), std::max_element(peaks.begin(), peaks.end())));
        if (!(peaks[worst] > threshold) || peaks[worst] == 0.0) {
            break;
        }
        const std::size_t begin = worst * win;
        const std::size_t end = std::min(n, begin + win);
        std::size_t peak = begin;
        for (std::size_t i = begin; i < end; ++i) {
            if (std::abs(x[i]) > std::abs(x[peak])) {
                peak = i;
            }
        }
        // Crossing index j means the sign flips between j and j + 1.
        std::size_t lo = begin;
        for (std::size_t j = peak; j-- > begin;) {
            if (j + 1 < end && crosses_zero(x[j], x[j + 1])) {
                lo = j + 1;
                break;
            }
        }
        std::size_t hi = end - 1;
        for (std::size_t j = peak; j + 1 < end; ++j) {
            if (crosses_zero(x[j], x[j + 1])) {
                hi = j;
                break;
            }
        }
        std::fill(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi + 1), 0.0);
        peaks[worst] = window_peak(worst);
    }
    return x;
}

std::vector<double> homomorphic_envelope(std::span<const double> samples, double sample_rate) {
    auto mag = dsp::analytic_magnitude(samples);
    const double peak = mag.empty() ? 0.0 : *std::max_element(mag.begin(), mag.end());
    if (!(peak > 0.0)) {
        return std::vector<double>(samples.size(), 0.0);
    }
    const double floor = 1e-6 * peak;
    for (double& m : mag) {
        m = std::log(std::max(m, floor));
    }
    const auto sos = dsp::butterworth_lowpass(1, 15.0, sample_rate);
    auto env = dsp::sosfiltfilt(sos, mag);
    for (double& e : env) {
        e = std::exp(e);
    }
    return env;
}

namespace {

/// Greedy selection by descending height with a minimum index separation.
std::vector<std::size_t> pick_peaks(const std::vector<std::size_t>& candidates, const std::vector<double>& env,
                                    std::size_t min_separation) {
    std::vector<std::size_t> order = candidates;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return env[a] > env[b]; });
    std::set<std::size_t> accepted;
    for (std::size_t c : order) {
        auto it = accepted.lower_bound(c);
        if (it != accepted.end() && *it - c < min_separation) {
            continue;
        }
        if (it != accepted.begin() && c - *std::prev(it) < min_separation) {
            continue;
        }
        accepted.insert(c);
    }
    return {accepted.begin(), accepted.end()};
}

/// Lag of the strongest positive local maximum of the envelope
/// autocorrelation within [0.375 s, 1.5 s]; 0 when there is none.
std::size_t estimate_period(const std::vector<double>& env, double fs) {
    const std::size_t n = env.size();
    const double mean = std::accumulate(env.begin(), env.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) {
        centered[i] = env[i] - mean;
    }
    auto corr = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) {
            s += centered[i] * centered[i + lag];
        }
        return s;
    };
    const double r0 = corr(0);
    if (!(r0 > 0.0)) {
        return 0;
    }
    const auto lo = static_cast<std::size_t>(std::ceil(0.375 * fs));
    const auto hi = std::min(n - 2, static_cast<std::size_t>(std::floor(1.5 * fs)));
    if (lo < 1 || lo >= hi) {
        return 0;
    }
    std::vector<double> r(hi + 2);
    for (std::size_t lag = lo - 1; lag <= hi + 1; ++lag) {
        r[lag] = corr(lag);
    }
    std::size_t best = 0;
    double best_value = 0.1 * r0;
    for (std::size_t lag = lo; lag <= hi; ++lag) {
        if (r[lag] > r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] > best_value) {
            best = lag;
            best_value = r[lag];
        }
    }
    return best;
}

} // namespace

CycleBoundaries segment_cycles(std::span<const double> samples, double sample_rate) {
    const double fs = sample_rate;
    if (static_cast<double>(samples.size()) < 2.0 * fs) {
        throw SignalTooShort("segmentation needs at least 2 s of signal");
    }
    const bool silent = std::all_of(samples.begin(), samples.end(), [](double v) { return v == 0.0; });
    if (silent) {
        throw NoCyclesFound("signal is silent");
    }

    auto env = homomorphic_envelope(samples, fs);
    const double env_max = *std::max_element(env.begin(), env.end());
    for (double& e : env) {
        e /= env_max;
    }

    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < env.size(); ++i) {
        if (env[i] >= 0.1 && env[i] > env[i - 1] && env[i] >= env[i + 1]) {
            candidates.push_back(i);
        }
    }
    if (candidates.empty()) {
        throw NoCyclesFound("no envelope peaks above 10% of the envelope maximum");
    }

    const std::size_t period = estimate_period(env, fs);
    if (period == 0) {
        throw NoCyclesFound("no heart-period estimate from the envelope autocorrelation");
    }
    const double T = static_cast<double>(period);

    // Individual heart sounds: close enough to keep S1 and S2 apart.
    const auto sound_sep = static_cast<std::size_t>(std::max(1.0, std::min(0.2 * T, 0.2 * fs)));
    const auto sounds = pick_peaks(candidates, env, sound_sep);

    // A sound that opens the shorter of its two gaps starts a systole (S1).
    std::vector<std::size_t> s1_candidates;
    for (std::size_t k = 0; k < sounds.size(); ++k) {
        const double prev_gap = k > 0 ? static_cast<double>(sounds[k] - sounds[k - 1]) : -1.0;
        const double next_gap = k + 1 < sounds.size() ? static_cast<double>(sounds[k + 1] - sounds[k]) : -1.0;
        bool is_s1 = false;
        if (prev_gap > 0 && next_gap > 0) {
            is_s1 = next_gap < prev_gap;
        } else if (next_gap > 0) {
            is_s1 = next_gap < 0.5 * T;
        } else if (prev_gap > 0) {
            is_s1 = prev_gap > 0.5 * T;
        }
        if (is_s1) {
            s1_candidates.push_back(sounds[k]);
        }
    }
    const auto s1 = pick_peaks(s1_candidates, env, static_cast<std::size_t>(0.7 * T));
    if (s1.size() < 2) {
        throw NoCyclesFound("fewer than two S1 sounds detected");
    }

    std::vector<std::size_t> onsets;
    for (std::size_t peak : s1) {
        const auto it = std::lower_bound(sounds.begin(), sounds.end(), peak);
        const std::size_t floor_idx = it == sounds.begin() ? 0 : *std::prev(it);
        const double half = 0.5 * env[peak];
        std::size_t j = peak;
        while (j > floor_idx && env[j - 1] >= half) {
            --j;
        }
        onsets.push_back(j);
    }

    const auto min_len = static_cast<std::size_t>(std::llround(0.3 * fs));
    const auto max_len = static_cast<std::size_t>(std::llround(2.5 * fs));
    CycleBoundaries out;
    for (std::size_t k = 0; k + 1 < onsets.size(); ++k) {
        const std::size_t len = onsets[k + 1] - onsets[k];
        if (len >= min_len && len <= max_len) {
            out.starts.push_back(onsets[k]);
            out.ends.push_back(onsets[k + 1]);
        }
    }
    if (out.starts.empty()) {
        throw NoCyclesFound("no cycle length within [0.3 s, 2.5 s]");
    }
    return out;
}

std::vector<double> fix_length(std::span<const double> samples, std::size_t target) {
    std::vector<double> out(target, 0.0);
    std::copy_n(samples.begin(), std::min(target, samples.size()), out.begin());
    return out;
}

std::vector<double> scale_for_conv(std::span<const double> samples) {
    double peak = 0.0;
    for (double v : samples) {
        peak = std::max(peak, std::abs(v));
    }
    std::vector<double> out(samples.begin(), samples.end());
    for (double& v : out) {
        if (peak > 0.0) {
            v /= peak;
        }
        v += 1.0;
    }
    return out;
}

Cycle scale_for_conv(Cycle cycle) {
    cycle.samples = scale_for_conv(std::span<const double>(cycle.samples));
    return cycle;
}

std::vector<Cycle> extract_cycles(const Recording& recording, const PreprocessConfig& config) {
    if (recording.samples.empty()) {
        throw EmptyRecording("recording '" + recording.id + "' has no samples");
    }
    const double fs = config.target_rate;
    auto x = resample(recording.samples, recording.sample_rate, config.target_rate);
    x = bandpass(x, config.filter, fs);
    x = remove_spikes(x, fs);
    const auto bounds = segment_cycles(x, fs);

    std::vector<Cycle> cycles;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const std::span<const double> seg(x.data() + bounds.starts[i], bounds.ends[i] - bounds.starts[i]);
        Cycle c;
        c.samples = fix_length(seg, config.cycle_length);
        c.patient_id = recording.patient_id;
        c.record_id = recording.id;
        c.label = recording.label;
        c.cycle_index = static_cast<int>(i);
        cycles.push_back(std::move(c));
    }
    return cycles;
}

} // namespace phonocard
