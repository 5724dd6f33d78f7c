#pragma once

#include "phonocard/nn/checkpoint.hpp"
#include "phonocard/nn/layers.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace phonocard {

enum class Variant { ConvOnly, RnnRaw, RnnMfcc, DualNoAttention, Full };

inline constexpr std::array<Variant, 5> kAllVariants = {Variant::ConvOnly, Variant::RnnRaw, Variant::RnnMfcc,
                                                        Variant::DualNoAttention, Variant::Full};

/// Short identifier used on the command line and in checkpoints ("full", "conv-only", ...).
std::string_view variant_key(Variant v);
/// Human-readable row name for ablation reports.
std::string_view variant_title(Variant v);
/// Accepts the short key, case-insensitively. Throws ConfigError otherwise.
Variant parse_variant(std::string_view text);

bool uses_conv_stream(Variant v);
bool uses_recurrent_stream(Variant v);
bool uses_mfcc(Variant v);

struct ConvBlockSpec {
    std::size_t kernel = 0;
    std::size_t filters = 0;
    bool pool_after = false;

    bool operator==(const ConvBlockSpec&) const = default;
};

struct ModelConfig {
    std::vector<ConvBlockSpec> conv_blocks;
    std::size_t input_length = 2500;
    std::size_t stream_features = 64;
    std::size_t gru_hidden = 128;
    std::size_t mfcc_frames = 18;
    std::size_t mfcc_coeffs = 13;
    std::size_t attention_hidden = 64;
    std::size_t head_hidden = 32;
    double leaky_slope = 0.01;

    /// Six conv blocks with four pools, GRU of 128, 64-wide stream outputs.
    static ModelConfig standard();
    /// Filters divided by 8, GRU hidden 8, input length 100. For gradient checks.
    static ModelConfig reduced();

    void validate() const;
    /// Sequence length reaching the flatten step.
    std::size_t conv_output_length() const;
    std::size_t flatten_size() const;

    std::map<std::string, std::string> to_map() const;
    static ModelConfig from_map(const std::map<std::string, std::string>& kv);

    bool operator==(const ModelConfig&) const = default;
};

/// Batched network inputs. Only the tensors the variant consumes need to be
/// filled: `waveform` is batch x 1 x length (already scaled for the conv
/// stream), `raw_sequence` is batch x length x 1 (unscaled), `mfcc` is
/// batch x frames x coeffs.
template <typename T>
struct ModelInput {
    nn::Tensor<T> waveform;
    nn::Tensor<T> raw_sequence;
    nn::Tensor<T> mfcc;
};

template <typename T>
struct ConvBlockCache {
    nn::Tensor<T> input;
    nn::BatchNormCache<T> bn;
    nn::Tensor<T> normalized;  // batchnorm output, leaky-ReLU input
    nn::Shape pool_input_shape;
    std::vector<std::size_t> pool_argmax;
};

template <typename T>
struct ForwardCache {
    nn::Mode mode = nn::Mode::Eval;
    std::size_t batch = 0;
    std::vector<ConvBlockCache<T>> blocks;
    nn::Tensor<T> flat;
    nn::Tensor<T> conv_features;
    nn::GruCache<T> gru;
    nn::Tensor<T> gru_final;
    nn::Tensor<T> rnn_features;
    nn::Tensor<T> concat;
    nn::Tensor<T> attention_pre;  // before ReLU
    nn::Tensor<T> attention_hidden;
    nn::Tensor<T> mask;
    nn::Tensor<T> head_input;
    nn::Tensor<T> head_pre;  // before ReLU
    nn::Tensor<T> head_hidden;
    nn::Tensor<T> probabilities;  // batch x 1
};

template <typename T>
struct NamedParameter {
    std::string name;
    nn::Tensor<T>* tensor;
};

template <typename T>
class DualStreamModel {
public:
    DualStreamModel(Variant variant, ModelConfig config);

    Variant variant() const { return variant_; }
    const ModelConfig& config() const { return config_; }

    /// Returns batch x 1 probabilities of the abnormal class. Train mode
    /// updates batch-norm running statistics.
    nn::Tensor<T> forward(const ModelInput<T>& input, nn::Mode mode, ForwardCache<T>* cache = nullptr);

    /// Writes d(loss)/d(parameter) into every parameter's grad buffer.
    void backward(const ForwardCache<T>& cache, const nn::Tensor<T>& grad_probabilities);
    /// Same, starting from the gradient w.r.t. the pre-sigmoid output.
    void backward_from_logits(const ForwardCache<T>& cache, const nn::Tensor<T>& grad_logits);

    /// Stream outputs on their own (Eval-mode batch norm unless stated).
    nn::Tensor<T> conv_stream(const nn::Tensor<T>& waveform, nn::Mode mode = nn::Mode::Eval);
    nn::Tensor<T> recurrent_stream(const nn::Tensor<T>& sequence);

    /// Trainable tensors in a fixed order.
    std::vector<NamedParameter<T>> parameters();
    /// Batch-norm running statistics.
    std::vector<NamedParameter<T>> buffers();
    std::size_t parameter_count();

    void zero_grad();

    std::vector<nn::Conv1dLayer<T>> conv;
    std::vector<nn::BatchNorm1dLayer<T>> bn;
    nn::DenseLayer<T> conv_dense;
    nn::GruLayer<T> gru;
    nn::DenseLayer<T> rnn_dense;
    nn::DenseLayer<T> attention_in;
    nn::DenseLayer<T> attention_out;
    nn::DenseLayer<T> head_hidden;
    nn::DenseLayer<T> head_out;

private:
    nn::Tensor<T> conv_forward(const nn::Tensor<T>& waveform, nn::Mode mode, ForwardCache<T>* cache);
    std::size_t check_inputs(const ModelInput<T>& input) const;

    Variant variant_;
    ModelConfig config_;
};

/// Glorot weights, zero biases, unit batch-norm scale. Each tensor draws
/// from a generator keyed by (seed, tensor name), so variants sharing a
/// tensor name start from identical values.
template <typename T>
DualStreamModel<T> build_variant(Variant variant, std::uint64_t seed, const ModelConfig& config = ModelConfig::standard());

/// Parameters, running statistics and a manifest (variant plus model
/// configuration; callers add feature settings).
nn::Checkpoint to_checkpoint(DualStreamModel<float>& model);
DualStreamModel<float> from_checkpoint(const nn::Checkpoint& ckpt);

/// Copies tensors with matching names and shapes from `src` into `dst`.
template <typename T>
void copy_matching_parameters(DualStreamModel<T>& src, DualStreamModel<T>& dst);

} // namespace phonocard
