#pragma once

#include <complex>
#include <span>
#include <vector>

namespace phonocard::dsp {

/// Second-order section, a0 normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

using Sos = std::vector<Biquad>;

/// Digital Butterworth low-pass of the given order, bilinear transform with
/// pre-warping, unity DC gain.
Sos butterworth_lowpass(int order, double cutoff_hz, double sample_rate);

/// Digital Butterworth band-pass. `order` is the order of the band-pass
/// filter itself (even), i.e. twice the low-pass prototype order. Unity gain
/// at the geometric centre of the pre-warped band.
Sos butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate);

/// Complex response at `freq_hz`.
std::complex<double> frequency_response(const Sos& sos, double freq_hz, double sample_rate);

/// Causal cascade filtering from zero initial state.
std::vector<double> sosfilt(const Sos& sos, std::span<const double> x);

/// Zero-phase forward-backward filtering with odd reflection padding and
/// steady-state initial conditions.
std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x);

/// Magnitude of the analytic signal (FFT-based Hilbert transform).
std::vector<double> analytic_magnitude(std::span<const double> x);

} // namespace phonocard::dsp
