#include "phonocard/dsp.hpp"

#include "phonocard/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace phonocard::dsp {

namespace {

using cd = std::complex<double>;

/// Butterworth analog low-pass prototype poles on the unit circle.
std::vector<cd> prototype_poles(int n) {
    std::vector<cd> poles;
    for (int k = 0; k < n; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n);
        poles.emplace_back(std::cos(theta), std::sin(theta));
    }
    return poles;
}

double prewarp(double hz, double fs) {
    return 2.0 * fs * std::tan(std::numbers::pi * hz / fs);
}

cd bilinear(cd s, double fs) {
    return (2.0 * fs + s) / (2.0 * fs - s);
}

/// Groups digital poles into conjugate pairs (or real pairs/singletons).
std::vector<std::pair<cd, cd>> pair_poles(std::vector<cd> poles) {
    constexpr double tol = 1e-12;
    std::vector<cd> complex_upper;
    std::vector<double> reals;
    for (const auto& p : poles) {
        if (std::abs(p.imag()) <= tol * std::max(1.0, std::abs(p))) {
            reals.push_back(p.real());
        } else if (p.imag() > 0) {
            complex_upper.push_back(p);
        }
    }
    std::vector<std::pair<cd, cd>> out;
    for (const auto& p : complex_upper) {
        out.emplace_back(p, std::conj(p));
    }
    std::sort(reals.begin(), reals.end());
    for (std::size_t i = 0; i < reals.size(); i += 2) {
        if (i + 1 < reals.size()) {
            out.emplace_back(reals[i], reals[i + 1]);
        } else {
            out.emplace_back(reals[i], cd(0.0, 0.0));  // marks a first-order section
        }
    }
    return out;
}

Biquad section_from_poles(const std::pair<cd, cd>& pp, double b0, double b1, double b2) {
    // (1 - p z^-1)(1 - q z^-1) = 1 - (p+q) z^-1 + pq z^-2
    Biquad s;
    s.b0 = b0;
    s.b1 = b1;
    s.b2 = b2;
    s.a1 = -(pp.first + pp.second).real();
    s.a2 = (pp.first * pp.second).real();
    return s;
}

void normalize_gain(Sos& sos, double freq_hz, double fs) {
    const double g = std::abs(frequency_response(sos, freq_hz, fs));
    sos.front().b0 /= g;
    sos.front().b1 /= g;
    sos.front().b2 /= g;
}

} // namespace

Sos butterworth_lowpass(int order, double cutoff_hz, double sample_rate) {
    if (order < 1 || !(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate / 2.0)) {
        throw ConfigError("invalid low-pass design parameters");
    }
    const double wc = prewarp(cutoff_hz, sample_rate);
    std::vector<cd> digital;
    for (const auto& p : prototype_poles(order)) {
        digital.push_back(bilinear(p * wc, sample_rate));
    }
    Sos sos;
    for (const auto& pp : pair_poles(digital)) {
        const bool first_order = pp.second == cd(0.0, 0.0) && pp.first.imag() == 0.0;
        // Zeros at z = -1 (analog zeros at infinity).
        sos.push_back(first_order ? section_from_poles(pp, 1.0, 1.0, 0.0)
                                  : section_from_poles(pp, 1.0, 2.0, 1.0));
    }
    normalize_gain(sos, 0.0, sample_rate);
    return sos;
}

Sos butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate) {
    if (order < 2 || order % 2 != 0) {
        throw ConfigError("band-pass order must be even and at least 2");
    }
    if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate / 2.0)) {
        throw ConfigError("band-pass cutoffs must satisfy 0 < low < high < fs/2");
    }
    const double wl = prewarp(low_hz, sample_rate);
    const double wh = prewarp(high_hz, sample_rate);
    const double bw = wh - wl;
    const double w0 = std::sqrt(wl * wh);

    std::vector<cd> digital;
    for (const auto& p : prototype_poles(order / 2)) {
        const cd half = p * bw / 2.0;
        const cd root = std::sqrt(half * half - w0 * w0);
        digital.push_back(bilinear(half + root, sample_rate));
        digital.push_back(bilinear(half - root, sample_rate));
    }
    Sos sos;
    for (const auto& pp : pair_poles(digital)) {
        // One zero at z = 1 (analog DC) and one at z = -1 per section.
        sos.push_back(section_from_poles(pp, 1.0, 0.0, -1.0));
    }
    const double f0 = sample_rate / std::numbers::pi * std::atan(w0 / (2.0 * sample_rate));
    normalize_gain(sos, f0, sample_rate);
    return sos;
}

std::complex<double> frequency_response(const Sos& sos, double freq_hz, double sample_rate) {
    const cd zinv = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate);
    cd h(1.0, 0.0);
    for (const auto& s : sos) {
        h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) / (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
    }
    return h;
}

namespace {

struct State {
    double s1 = 0.0;
    double s2 = 0.0;
};

void run_cascade(const Sos& sos, std::vector<State>& state, std::vector<double>& x) {
    for (std::size_t k = 0; k < sos.size(); ++k) {
        const auto& c = sos[k];
        auto& st = state[k];
        for (double& v : x) {
            const double in = v;
            const double y = c.b0 * in + st.s1;
            st.s1 = c.b1 * in - c.a1 * y + st.s2;
            st.s2 = c.b2 * in - c.a2 * y;
            v = y;
        }
    }
}

/// Transposed direct-form II state that a unit step settles to, for each
/// section of the cascade.
std::vector<State> step_state(const Sos& sos) {
    std::vector<State> zi(sos.size());
    double level = 1.0;
    for (std::size_t k = 0; k < sos.size(); ++k) {
        const auto& c = sos[k];
        const double y = level * (c.b0 + c.b1 + c.b2) / (1.0 + c.a1 + c.a2);
        zi[k].s2 = c.b2 * level - c.a2 * y;
        zi[k].s1 = y - c.b0 * level;
        level = y;
    }
    return zi;
}

std::vector<State> scaled(const std::vector<State>& zi, double factor) {
    std::vector<State> out = zi;
    for (auto& s : out) {
        s.s1 *= factor;
        s.s2 *= factor;
    }
    return out;
}

} // namespace

std::vector<double> sosfilt(const Sos& sos, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    std::vector<State> state(sos.size());
    run_cascade(sos, state, y);
    return y;
}

std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) {
        return {};
    }
    const std::size_t taps = 2 * sos.size() + 1;
    const std::size_t pad = std::min<std::size_t>(3 * taps, n - 1);

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) {
        ext.push_back(2.0 * x[0] - x[i]);
    }
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) {
        ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    const auto zi = step_state(sos);
    auto state = scaled(zi, ext.front());
    run_cascade(sos, state, ext);
    std::reverse(ext.begin(), ext.end());
    state = scaled(zi, ext.front());
    run_cascade(sos, state, ext);
    std::reverse(ext.begin(), ext.end());

    return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                               ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

std::vector<double> analytic_magnitude(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) {
        return {};
    }
    // FFTW planning is not thread-safe; callers run single-threaded.
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan inv = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    for (std::size_t i = 0; i < n; ++i) {
        buf[i][0] = x[i];
        buf[i][1] = 0.0;
    }
    fftw_execute(fwd);
    // Analytic-signal spectrum: keep DC (and Nyquist), double positive bins,
    // zero negative bins.
    const std::size_t half = n / 2;
    for (std::size_t k = 1; k < n; ++k) {
        double w = 0.0;
        if (k < (n + 1) / 2) {
            w = 2.0;
        } else if (n % 2 == 0 && k == half) {
            w = 1.0;
        }
        buf[k][0] *= w;
        buf[k][1] *= w;
    }
    fftw_execute(inv);
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) {
        mag[i] = std::hypot(buf[i][0], buf[i][1]) / static_cast<double>(n);
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(buf);
    return mag;
}

} // namespace phonocard::dsp
