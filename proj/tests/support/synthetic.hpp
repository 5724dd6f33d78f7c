#pragma once

#include "phonocard/features.hpp"
#include "phonocard/model.hpp"
#include "phonocard/nn/tensor.hpp"
#include "phonocard/preprocess.hpp"
#include "phonocard/random.hpp"
#include "phonocard/training.hpp"

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace phonocard::testing {

inline constexpr double kPi = 3.14159265358979323846;

std::vector<double> sine(double freq, double seconds, double rate, double amplitude = 1.0, double phase = 0.0);

/// Synthetic PCG: per beat an S1 burst at the beat start and a weaker S2
/// burst `systole` seconds later. Bursts are Gaussian-windowed tones
/// centred 50 ms after their nominal start. `starts` receives the beat
/// start indices.
struct ClickTrain {
    std::vector<double> samples;
    std::vector<std::size_t> starts;
};

ClickTrain click_train(double bpm, double seconds, double rate, Rng& rng, double noise = 0.01,
                       double systole_fraction = 0.3);

/// One fixed-length toy cycle: S1 and S2 bursts of tone `freq` with random
/// period, phase and amplitude, plus Gaussian noise of `noise` std.
std::vector<double> toy_cycle(double freq, double noise, Rng& rng, std::size_t length = kCycleLength,
                              double rate = 1000.0);

/// Class A (Normal) uses 60 Hz bursts, class B (Abnormal) 150 Hz bursts
/// plus noise. Each cycle is its own patient. MFCCs use the default config.
ExampleSet toy_examples(std::size_t per_class, std::uint64_t seed, std::size_t length = kCycleLength);

/// Writes a tiny PhysioNet-style corpus: per recording a WAV at `rate` Hz
/// and a line in REFERENCE.csv. Abnormal records use the higher tone.
void write_toy_corpus(const std::filesystem::path& dir, std::size_t records_per_class, double seconds, int rate,
                      std::uint64_t seed);

/// Max over entries of |a - n| / max(|a|, |n|) between an analytic
/// gradient and central differences of `loss` w.r.t. `values`
/// (step 1e-3). Entries where `skip` returns true, or where both
/// agree to 1e-9 absolute, are ignored.
double gradient_error(std::span<double> values, std::span<const double> analytic,
                      const std::function<double()>& loss, double step = 1e-3,
                      const std::function<bool(std::size_t)>& skip = {});

nn::Tensor<double> random_tensor(const nn::Shape& shape, Rng& rng, double scale = 1.0);

/// Sum of elementwise products, the scalar loss used in gradient checks.
double dot(const nn::Tensor<double>& a, const nn::Tensor<double>& b);

/// Random inputs for every stream: waveform in [0, 2), unit-normal raw
/// sequence and MFCC.
ModelInput<double> random_model_input(const ModelConfig& config, std::size_t batch, Rng& rng);

/// Worst relative error between backward() and central differences of a
/// random linear functional of the Train-mode output, over every
/// parameter of a reduced model of the given variant.
double model_gradient_error(Variant variant, std::uint64_t seed, std::size_t batch = 2, double step = 1e-5);

} // namespace phonocard::testing
