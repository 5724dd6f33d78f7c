#pragma once

#include "phonocard/nn/tensor.hpp"
#include "phonocard/random.hpp"

#include <cstddef>
#include <type_traits>
#include <vector>

namespace phonocard::nn {

enum class Mode { Train, Eval };

// ---------------------------------------------------------------------------
// Convolution: stride 1, zero "same" padding with
// left = floor((k - 1) / 2), right = ceil((k - 1) / 2).

template <typename T>
struct Conv1dLayer {
    Tensor<T> weights;  // out x in x kernel
    Tensor<T> bias;     // out

    Conv1dLayer() = default;
    Conv1dLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
        : weights({out_channels, in_channels, kernel}), bias({out_channels}) {}

    std::size_t out_channels() const { return weights.dim(0); }
    std::size_t in_channels() const { return weights.dim(1); }
    std::size_t kernel() const { return weights.dim(2); }
    std::size_t pad_left() const { return (kernel() - 1) / 2; }
};

template <typename T>
struct Conv1dGrads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> bias;
};

/// batch x channels x length -> batch x out_channels x length.
template <typename T>
Tensor<T> conv1d_forward(const Conv1dLayer<T>& layer, const Tensor<T>& input);

template <typename T>
Conv1dGrads<T> conv1d_backward(const Conv1dLayer<T>& layer, const Tensor<T>& input, const Tensor<T>& upstream);

// ---------------------------------------------------------------------------
// Batch normalization over (batch, length) per channel.

template <typename T>
struct BatchNorm1dLayer {
    Tensor<T> gamma;
    Tensor<T> beta;
    Tensor<T> running_mean;
    Tensor<T> running_var;
    T momentum = T(0.1);
    T epsilon = T(1e-5);

    BatchNorm1dLayer() = default;
    explicit BatchNorm1dLayer(std::size_t channels)
        : gamma({channels}, T(1)), beta({channels}), running_mean({channels}), running_var({channels}, T(1)) {}

    std::size_t channels() const { return gamma.size(); }
};

template <typename T>
struct BatchNormCache {
    Mode mode = Mode::Eval;
    Tensor<T> normalized;
    Buffer<T> inv_std;
};

template <typename T>
struct BatchNormGrads {
    Tensor<T> input;
    Tensor<T> gamma;
    Tensor<T> beta;
};

/// Train mode normalizes with batch statistics and folds them into the
/// running estimates (unbiased variance); Eval mode uses the running
/// estimates only.
template <typename T>
Tensor<T> batchnorm1d_forward(BatchNorm1dLayer<T>& layer, const Tensor<T>& input, Mode mode,
                              std::type_identity_t<BatchNormCache<T>>* cache = nullptr);

template <typename T>
BatchNormGrads<T> batchnorm1d_backward(const BatchNorm1dLayer<T>& layer, const BatchNormCache<T>& cache,
                                       const Tensor<T>& upstream);

// ---------------------------------------------------------------------------
// Elementwise activations. Backward functions take the forward input (or
// output, for sigmoid) and the upstream gradient.

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& input, T slope);
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& input, const Tensor<T>& upstream, T slope);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input);
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& upstream);

template <typename T>
T sigmoid_scalar(T x);

// ---------------------------------------------------------------------------
// Max pooling along the last axis. Trailing elements that do not fill a
// window are dropped; ties resolve to the earlier index.

template <typename T>
struct PoolResult {
    Tensor<T> output;
    std::vector<std::size_t> argmax;  // position along the length axis, per output element
};

template <typename T>
PoolResult<T> maxpool1d(const Tensor<T>& input, std::size_t pool = 2, std::size_t stride = 2);

template <typename T>
Tensor<T> maxpool1d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                             const Tensor<T>& upstream);

// ---------------------------------------------------------------------------
// Fully connected: batch x in -> batch x out, y = x W^T + b.

template <typename T>
struct DenseLayer {
    Tensor<T> weights;  // out x in
    Tensor<T> bias;     // out

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out) : weights({out, in}), bias({out}) {}

    std::size_t in_features() const { return weights.dim(1); }
    std::size_t out_features() const { return weights.dim(0); }
};

template <typename T>
struct DenseGrads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> bias;
};

template <typename T>
Tensor<T> dense_forward(const DenseLayer<T>& layer, const Tensor<T>& input);

template <typename T>
DenseGrads<T> dense_backward(const DenseLayer<T>& layer, const Tensor<T>& input, const Tensor<T>& upstream);

// ---------------------------------------------------------------------------
// Gated recurrent unit. Per step:
//   z = sigmoid(W_z x + U_z h + b_z)
//   r = sigmoid(W_r x + U_r h + b_r)
//   c = tanh(W_h x + U_h (r * h) + b_h)
//   h <- (1 - z) * h + z * c

template <typename T>
struct GruLayer {
    Tensor<T> w_z, w_r, w_h;  // hidden x input
    Tensor<T> u_z, u_r, u_h;  // hidden x hidden
    Tensor<T> b_z, b_r, b_h;  // hidden

    GruLayer() = default;
    GruLayer(std::size_t input, std::size_t hidden)
        : w_z({hidden, input}), w_r({hidden, input}), w_h({hidden, input}),
          u_z({hidden, hidden}), u_r({hidden, hidden}), u_h({hidden, hidden}),
          b_z({hidden}), b_r({hidden}), b_h({hidden}) {}

    std::size_t hidden() const { return w_z.dim(0); }
    std::size_t input_size() const { return w_z.dim(1); }
};

/// Activations saved by gru_forward. Buffers are time-major:
/// states[t] holds the hidden state entering step t (states[steps] is final).
template <typename T>
struct GruCache {
    std::size_t batch = 0;
    std::size_t steps = 0;
    std::size_t input = 0;
    std::size_t hidden = 0;
    Tensor<T> inputs;
    Buffer<T> states;
    Buffer<T> z;
    Buffer<T> r;
    Buffer<T> candidate;
};

template <typename T>
struct GruOutput {
    Tensor<T> states;       // batch x time x hidden (empty unless requested)
    Tensor<T> final_state;  // batch x hidden
};

/// inputs: batch x time x features. `h0` defaults to zeros.
template <typename T>
GruOutput<T> gru_forward(const GruLayer<T>& layer, const Tensor<T>& inputs, const std::type_identity_t<Tensor<T>>* h0 = nullptr,
                         std::type_identity_t<GruCache<T>>* cache = nullptr, bool return_states = true);

template <typename T>
struct GruGrads {
    Tensor<T> inputs;
    Tensor<T> h0;
    Tensor<T> w_z, w_r, w_h;
    Tensor<T> u_z, u_r, u_h;
    Tensor<T> b_z, b_r, b_h;
};

/// Backpropagation through time. Either upstream may be null (treated as
/// zero): `upstream_states` is batch x time x hidden, `upstream_final` is
/// batch x hidden.
template <typename T>
GruGrads<T> gru_backward(const GruLayer<T>& layer, const GruCache<T>& cache,
                         const std::type_identity_t<Tensor<T>>* upstream_states,
                         const std::type_identity_t<Tensor<T>>* upstream_final);

// ---------------------------------------------------------------------------
// Binary cross-entropy on probabilities, clamped to [1e-7, 1 - 1e-7].

template <typename T>
struct LossResult {
    T loss = T(0);
    Tensor<T> grad;  // d(mean loss) / d(probability)
};

template <typename T>
LossResult<T> bce_loss(const Tensor<T>& probabilities, const Tensor<T>& targets);

/// d(mean loss) / d(logit) for sigmoid outputs, (p - y) / n. Equal to the
/// bce_loss gradient times the sigmoid derivative, but stays informative
/// when p has rounded to 0 or 1.
template <typename T>
Tensor<T> bce_logit_grad(const Tensor<T>& probabilities, const Tensor<T>& targets);

// ---------------------------------------------------------------------------

/// Uniform in +-sqrt(6 / (fan_in + fan_out)). Rank 2 shapes are (out, in);
/// rank 3 shapes are (out, in, kernel) with the kernel counted in both fans.
template <typename T>
Tensor<T> glorot_init(const Shape& shape, Rng& rng);

double glorot_bound(const Shape& shape);

} // namespace phonocard::nn
