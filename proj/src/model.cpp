#include "phonocard/model.hpp"

#include "io_util.hpp"
#include "phonocard/random.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace phonocard {

using nn::Mode;
using nn::Tensor;

std::string_view variant_key(Variant v) {
    switch (v) {
    case Variant::ConvOnly: return "conv-only";
    case Variant::RnnRaw: return "rnn-raw";
    case Variant::RnnMfcc: return "rnn-mfcc";
    case Variant::DualNoAttention: return "dual-no-attention";
    case Variant::Full: return "full";
    }
    return "unknown";
}

std::string_view variant_title(Variant v) {
    switch (v) {
    case Variant::ConvOnly: return "Convolution Stream";
    case Variant::RnnRaw: return "Recurrent Stream with Raw Data";
    case Variant::RnnMfcc: return "Recurrent Stream with MFCC Feature";
    case Variant::DualNoAttention: return "Dual Stream Network without Attention";
    case Variant::Full: return "Proposed Method";
    }
    return "unknown";
}

Variant parse_variant(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::replace(lower.begin(), lower.end(), '_', '-');
    for (Variant v : kAllVariants) {
        if (lower == variant_key(v)) {
            return v;
        }
    }
    throw ConfigError("unknown model variant '" + std::string(text) +
                      "' (expected conv-only, rnn-raw, rnn-mfcc, dual-no-attention or full)");
}

bool uses_conv_stream(Variant v) {
    return v == Variant::ConvOnly || v == Variant::DualNoAttention || v == Variant::Full;
}

bool uses_recurrent_stream(Variant v) {
    return v != Variant::ConvOnly;
}

bool uses_mfcc(Variant v) {
    return v == Variant::RnnMfcc || v == Variant::DualNoAttention || v == Variant::Full;
}

// ---------------------------------------------------------------------------

ModelConfig ModelConfig::standard() {
    ModelConfig c;
    c.conv_blocks = {{32, 16, true}, {16, 32, true}, {8, 64, false}, {8, 64, true}, {8, 128, false}, {4, 256, true}};
    return c;
}

ModelConfig ModelConfig::reduced() {
    ModelConfig c = standard();
    for (auto& b : c.conv_blocks) {
        b.filters /= 8;
    }
    c.gru_hidden = 8;
    c.input_length = 100;
    return c;
}

void ModelConfig::validate() const {
    if (conv_blocks.empty()) {
        throw ConfigError("model needs at least one conv block");
    }
    for (const auto& b : conv_blocks) {
        if (b.kernel == 0 || b.filters == 0) {
            throw ConfigError("conv block kernel and filters must be positive");
        }
    }
    if (input_length == 0 || stream_features == 0 || gru_hidden == 0 || mfcc_frames == 0 || mfcc_coeffs == 0 ||
        attention_hidden == 0 || head_hidden == 0) {
        throw ConfigError("model sizes must be positive");
    }
    if (conv_output_length() == 0) {
        throw ConfigError("input length " + std::to_string(input_length) + " is too short for the pooling ladder");
    }
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
        throw ConfigError("leaky slope must lie in [0, 1)");
    }
}

std::size_t ModelConfig::conv_output_length() const {
    std::size_t len = input_length;
    for (const auto& b : conv_blocks) {
        if (b.pool_after) {
            len /= 2;
        }
    }
    return len;
}

std::size_t ModelConfig::flatten_size() const {
    return conv_output_length() * conv_blocks.back().filters;
}

std::map<std::string, std::string> ModelConfig::to_map() const {
    std::string ladder;
    for (const auto& b : conv_blocks) {
        if (!ladder.empty()) {
            ladder += ',';
        }
        ladder += std::to_string(b.kernel) + "x" + std::to_string(b.filters) + (b.pool_after ? "p" : "");
    }
    std::ostringstream slope;
    slope.precision(17);
    slope << leaky_slope;
    return {{"model.conv", ladder},
            {"model.input_length", std::to_string(input_length)},
            {"model.stream_features", std::to_string(stream_features)},
            {"model.gru_hidden", std::to_string(gru_hidden)},
            {"model.mfcc_frames", std::to_string(mfcc_frames)},
            {"model.mfcc_coeffs", std::to_string(mfcc_coeffs)},
            {"model.attention_hidden", std::to_string(attention_hidden)},
            {"model.head_hidden", std::to_string(head_hidden)},
            {"model.leaky_slope", slope.str()}};
}

namespace {

std::size_t to_size(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        throw FormatError("model manifest lacks '" + key + "'");
    }
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(it->second, &used);
        if (used != it->second.size()) {
            throw std::invalid_argument("trailing text");
        }
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw FormatError("model manifest value '" + key + "=" + it->second + "' is not a count");
    }
}

} // namespace

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
    ModelConfig c;
    const auto it = kv.find("model.conv");
    if (it == kv.end()) {
        throw FormatError("model manifest lacks 'model.conv'");
    }
    for (const auto& item : detail::split(it->second, ',')) {
        ConvBlockSpec b;
        std::string s = detail::trim(item);
        if (!s.empty() && s.back() == 'p') {
            b.pool_after = true;
            s.pop_back();
        }
        const auto x = s.find('x');
        try {
            if (x == std::string::npos) {
                throw std::invalid_argument("no separator");
            }
            b.kernel = std::stoul(s.substr(0, x));
            b.filters = std::stoul(s.substr(x + 1));
        } catch (const std::exception&) {
            throw FormatError("malformed conv block '" + item + "' in model manifest");
        }
        c.conv_blocks.push_back(b);
    }
    c.input_length = to_size(kv, "model.input_length");
    c.stream_features = to_size(kv, "model.stream_features");
    c.gru_hidden = to_size(kv, "model.gru_hidden");
    c.mfcc_frames = to_size(kv, "model.mfcc_frames");
    c.mfcc_coeffs = to_size(kv, "model.mfcc_coeffs");
    c.attention_hidden = to_size(kv, "model.attention_hidden");
    c.head_hidden = to_size(kv, "model.head_hidden");
    const auto slope = kv.find("model.leaky_slope");
    if (slope == kv.end()) {
        throw FormatError("model manifest lacks 'model.leaky_slope'");
    }
    try {
        c.leaky_slope = std::stod(slope->second);
    } catch (const std::exception&) {
        throw FormatError("malformed leaky slope in model manifest");
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------

template <typename T>
DualStreamModel<T>::DualStreamModel(Variant variant, ModelConfig config)
    : variant_(variant), config_(std::move(config)) {
    config_.validate();
    const std::size_t F = config_.stream_features;
    if (uses_conv_stream(variant_)) {
        std::size_t in = 1;
        for (const auto& b : config_.conv_blocks) {
            conv.emplace_back(in, b.filters, b.kernel);
            bn.emplace_back(b.filters);
            in = b.filters;
        }
        conv_dense = nn::DenseLayer<T>(config_.flatten_size(), F);
    }
    if (uses_recurrent_stream(variant_)) {
        const std::size_t input = variant_ == Variant::RnnRaw ? 1 : config_.mfcc_coeffs;
        gru = nn::GruLayer<T>(input, config_.gru_hidden);
        rnn_dense = nn::DenseLayer<T>(config_.gru_hidden, F);
    }
    const bool dual = variant_ == Variant::DualNoAttention || variant_ == Variant::Full;
    if (variant_ == Variant::Full) {
        attention_in = nn::DenseLayer<T>(2 * F, config_.attention_hidden);
        attention_out = nn::DenseLayer<T>(config_.attention_hidden, 2 * F);
    }
    head_hidden = nn::DenseLayer<T>(dual ? 2 * F : F, config_.head_hidden);
    head_out = nn::DenseLayer<T>(config_.head_hidden, 1);
}

template <typename T>
std::vector<NamedParameter<T>> DualStreamModel<T>::parameters() {
    std::vector<NamedParameter<T>> out;
    auto dense = [&](const std::string& name, nn::DenseLayer<T>& d) {
        out.push_back({name + ".weight", &d.weights});
        out.push_back({name + ".bias", &d.bias});
    };
    for (std::size_t i = 0; i < conv.size(); ++i) {
        const std::string idx = std::to_string(i);
        out.push_back({"conv" + idx + ".weight", &conv[i].weights});
        out.push_back({"conv" + idx + ".bias", &conv[i].bias});
        out.push_back({"bn" + idx + ".gamma", &bn[i].gamma});
        out.push_back({"bn" + idx + ".beta", &bn[i].beta});
    }
    if (uses_conv_stream(variant_)) {
        dense("conv_dense", conv_dense);
    }
    if (uses_recurrent_stream(variant_)) {
        out.push_back({"gru.w_z", &gru.w_z});
        out.push_back({"gru.w_r", &gru.w_r});
        out.push_back({"gru.w_h", &gru.w_h});
        out.push_back({"gru.u_z", &gru.u_z});
        out.push_back({"gru.u_r", &gru.u_r});
        out.push_back({"gru.u_h", &gru.u_h});
        out.push_back({"gru.b_z", &gru.b_z});
        out.push_back({"gru.b_r", &gru.b_r});
        out.push_back({"gru.b_h", &gru.b_h});
        dense("rnn_dense", rnn_dense);
    }
    if (variant_ == Variant::Full) {
        dense("attention_in", attention_in);
        dense("attention_out", attention_out);
    }
    dense("head_hidden", head_hidden);
    dense("head_out", head_out);
    return out;
}

template <typename T>
std::vector<NamedParameter<T>> DualStreamModel<T>::buffers() {
    std::vector<NamedParameter<T>> out;
    for (std::size_t i = 0; i < bn.size(); ++i) {
        out.push_back({"bn" + std::to_string(i) + ".running_mean", &bn[i].running_mean});
        out.push_back({"bn" + std::to_string(i) + ".running_var", &bn[i].running_var});
    }
    return out;
}

template <typename T>
std::size_t DualStreamModel<T>::parameter_count() {
    std::size_t n = 0;
    for (const auto& p : parameters()) {
        n += p.tensor->size();
    }
    return n;
}

template <typename T>
void DualStreamModel<T>::zero_grad() {
    for (auto& p : parameters()) {
        p.tensor->zero_grad();
    }
}

template <typename T>
std::size_t DualStreamModel<T>::check_inputs(const ModelInput<T>& input) const {
    std::size_t batch = 0;
    bool have = false;
    auto take = [&](const Tensor<T>& t, const nn::Shape& tail, const char* what) {
        if (t.empty()) {
            throw ConfigError(std::string("variant ") + std::string(variant_key(variant_)) + " needs " + what +
                              " input");
        }
        nn::Shape expected{t.rank() > 0 ? t.dim(0) : 0};
        expected.insert(expected.end(), tail.begin(), tail.end());
        nn::expect_shape(t, expected, what);
        if (have && t.dim(0) != batch) {
            throw ShapeError(std::string("batch size of ") + what + " input disagrees with the other stream");
        }
        batch = t.dim(0);
        have = true;
    };
    if (uses_conv_stream(variant_)) {
        take(input.waveform, {1, config_.input_length}, "waveform");
    }
    if (variant_ == Variant::RnnRaw) {
        take(input.raw_sequence, {config_.input_length, 1}, "raw sequence");
    }
    if (uses_mfcc(variant_)) {
        take(input.mfcc, {config_.mfcc_frames, config_.mfcc_coeffs}, "mfcc");
    }
    if (batch == 0) {
        throw ShapeError("empty batch");
    }
    return batch;
}

template <typename T>
Tensor<T> DualStreamModel<T>::conv_forward(const Tensor<T>& waveform, Mode mode, ForwardCache<T>* cache) {
    const T slope = static_cast<T>(config_.leaky_slope);
    Tensor<T> x = waveform;
    if (cache != nullptr) {
        cache->blocks.assign(conv.size(), {});
    }
    for (std::size_t i = 0; i < conv.size(); ++i) {
        Tensor<T> y = nn::conv1d_forward(conv[i], x);
        nn::BatchNormCache<T> bn_cache;
        Tensor<T> normalized = nn::batchnorm1d_forward(bn[i], y, mode, cache != nullptr ? &bn_cache : nullptr);
        Tensor<T> act = nn::leaky_relu(normalized, slope);
        if (cache != nullptr) {
            auto& b = cache->blocks[i];
            b.input = std::move(x);
            b.bn = std::move(bn_cache);
            b.normalized = std::move(normalized);
        }
        if (config_.conv_blocks[i].pool_after) {
            auto pooled = nn::maxpool1d(act, 2, 2);
            if (cache != nullptr) {
                cache->blocks[i].pool_input_shape = act.shape();
                cache->blocks[i].pool_argmax = std::move(pooled.argmax);
            }
            x = std::move(pooled.output);
        } else {
            x = std::move(act);
        }
    }
    const std::size_t B = x.dim(0);
    Tensor<T> flat = x.reshaped({B, x.size() / B});
    Tensor<T> features = nn::dense_forward(conv_dense, flat);
    if (cache != nullptr) {
        cache->flat = std::move(flat);
    }
    return features;
}

template <typename T>
Tensor<T> DualStreamModel<T>::conv_stream(const Tensor<T>& waveform, Mode mode) {
    if (!uses_conv_stream(variant_)) {
        throw ConfigError("variant has no convolution stream");
    }
    nn::expect_rank(waveform, 3, "waveform");
    nn::expect_shape(waveform, {waveform.dim(0), 1, config_.input_length}, "waveform");
    return conv_forward(waveform, mode, nullptr);
}

template <typename T>
Tensor<T> DualStreamModel<T>::recurrent_stream(const Tensor<T>& sequence) {
    if (!uses_recurrent_stream(variant_)) {
        throw ConfigError("variant has no recurrent stream");
    }
    auto out = nn::gru_forward<T>(gru, sequence, nullptr, nullptr, false);
    return nn::dense_forward(rnn_dense, out.final_state);
}

template <typename T>
Tensor<T> DualStreamModel<T>::forward(const ModelInput<T>& input, Mode mode, ForwardCache<T>* cache) {
    const std::size_t B = check_inputs(input);
    const std::size_t F = config_.stream_features;
    ForwardCache<T> local;
    ForwardCache<T>& c = cache != nullptr ? *cache : local;
    const bool keep = cache != nullptr;
    c = ForwardCache<T>{};
    c.mode = mode;
    c.batch = B;

    if (uses_conv_stream(variant_)) {
        c.conv_features = conv_forward(input.waveform, mode, keep ? &c : nullptr);
    }
    if (uses_recurrent_stream(variant_)) {
        const Tensor<T>& seq = variant_ == Variant::RnnRaw ? input.raw_sequence : input.mfcc;
        auto out = nn::gru_forward<T>(gru, seq, nullptr, keep ? &c.gru : nullptr, false);
        c.gru_final = std::move(out.final_state);
        c.rnn_features = nn::dense_forward(rnn_dense, c.gru_final);
    }

    switch (variant_) {
    case Variant::ConvOnly: c.head_input = c.conv_features; break;
    case Variant::RnnRaw:
    case Variant::RnnMfcc: c.head_input = c.rnn_features; break;
    case Variant::DualNoAttention:
    case Variant::Full: {
        c.concat = Tensor<T>({B, 2 * F});
        for (std::size_t b = 0; b < B; ++b) {
            std::copy_n(c.conv_features.data() + b * F, F, c.concat.data() + b * 2 * F);
            std::copy_n(c.rnn_features.data() + b * F, F, c.concat.data() + b * 2 * F + F);
        }
        if (variant_ == Variant::DualNoAttention) {
            c.head_input = c.concat;
            break;
        }
        c.attention_pre = nn::dense_forward(attention_in, c.concat);
        c.attention_hidden = nn::relu(c.attention_pre);
        c.mask = nn::sigmoid(nn::dense_forward(attention_out, c.attention_hidden));
        c.head_input = Tensor<T>(c.concat.shape());
        for (std::size_t i = 0; i < c.concat.size(); ++i) {
            c.head_input[i] = c.mask[i] * c.concat[i];
        }
        break;
    }
    }

    c.head_pre = nn::dense_forward(head_hidden, c.head_input);
    c.head_hidden = nn::relu(c.head_pre);
    c.probabilities = nn::sigmoid(nn::dense_forward(head_out, c.head_hidden));
    return c.probabilities;
}

namespace {

template <typename T>
void store(Tensor<T>& param, Tensor<T>&& grad) {
    param.grad() = std::move(grad.storage());
}

template <typename T>
void store_dense(nn::DenseLayer<T>& layer, nn::DenseGrads<T>& g) {
    store(layer.weights, std::move(g.weights));
    store(layer.bias, std::move(g.bias));
}

} // namespace

template <typename T>
void DualStreamModel<T>::backward(const ForwardCache<T>& c, const Tensor<T>& grad_probabilities) {
    if (c.batch == 0 || c.probabilities.empty() || c.head_input.empty()) {
        throw StateError("backward called without a forward cache");
    }
    nn::expect_shape(grad_probabilities, c.probabilities.shape(), "probability gradient");
    backward_from_logits(c, nn::sigmoid_backward(c.probabilities, grad_probabilities));
}

template <typename T>
void DualStreamModel<T>::backward_from_logits(const ForwardCache<T>& c, const Tensor<T>& grad_logits) {
    if (c.batch == 0 || c.probabilities.empty() || c.head_input.empty()) {
        throw StateError("backward called without a forward cache");
    }
    nn::expect_shape(grad_logits, c.probabilities.shape(), "logit gradient");
    const std::size_t B = c.batch;
    const std::size_t F = config_.stream_features;

    Tensor<T> d = grad_logits;
    auto g_out = nn::dense_backward(head_out, c.head_hidden, d);
    store_dense(head_out, g_out);
    d = nn::relu_backward(c.head_pre, g_out.input);
    auto g_hidden = nn::dense_backward(head_hidden, c.head_input, d);
    store_dense(head_hidden, g_hidden);
    Tensor<T> d_head_input = std::move(g_hidden.input);

    Tensor<T> d_conv_features, d_rnn_features;
    switch (variant_) {
    case Variant::ConvOnly: d_conv_features = std::move(d_head_input); break;
    case Variant::RnnRaw:
    case Variant::RnnMfcc: d_rnn_features = std::move(d_head_input); break;
    case Variant::DualNoAttention:
    case Variant::Full: {
        Tensor<T> d_concat;
        if (variant_ == Variant::DualNoAttention) {
            d_concat = std::move(d_head_input);
        } else {
            if (c.mask.empty() || c.concat.empty()) {
                throw StateError("forward cache lacks attention activations");
            }
            d_concat = Tensor<T>(c.concat.shape());
            Tensor<T> d_mask(c.mask.shape());
            for (std::size_t i = 0; i < c.concat.size(); ++i) {
                d_concat[i] = d_head_input[i] * c.mask[i];
                d_mask[i] = d_head_input[i] * c.concat[i];
            }
            Tensor<T> d_logits = nn::sigmoid_backward(c.mask, d_mask);
            auto g_att_out = nn::dense_backward(attention_out, c.attention_hidden, d_logits);
            store_dense(attention_out, g_att_out);
            Tensor<T> d_att = nn::relu_backward(c.attention_pre, g_att_out.input);
            auto g_att_in = nn::dense_backward(attention_in, c.concat, d_att);
            store_dense(attention_in, g_att_in);
            for (std::size_t i = 0; i < d_concat.size(); ++i) {
                d_concat[i] += g_att_in.input[i];
            }
        }
        d_conv_features = Tensor<T>({B, F});
        d_rnn_features = Tensor<T>({B, F});
        for (std::size_t b = 0; b < B; ++b) {
            std::copy_n(d_concat.data() + b * 2 * F, F, d_conv_features.data() + b * F);
            std::copy_n(d_concat.data() + b * 2 * F + F, F, d_rnn_features.data() + b * F);
        }
        break;
    }
    }

    if (uses_recurrent_stream(variant_)) {
        auto g_dense = nn::dense_backward(rnn_dense, c.gru_final, d_rnn_features);
        store_dense(rnn_dense, g_dense);
        auto g = nn::gru_backward<T>(gru, c.gru, nullptr, &g_dense.input);
        store(gru.w_z, std::move(g.w_z));
        store(gru.w_r, std::move(g.w_r));
        store(gru.w_h, std::move(g.w_h));
        store(gru.u_z, std::move(g.u_z));
        store(gru.u_r, std::move(g.u_r));
        store(gru.u_h, std::move(g.u_h));
        store(gru.b_z, std::move(g.b_z));
        store(gru.b_r, std::move(g.b_r));
        store(gru.b_h, std::move(g.b_h));
    }

    if (uses_conv_stream(variant_)) {
        if (c.blocks.size() != conv.size() || c.flat.empty()) {
            throw StateError("forward cache lacks convolution activations");
        }
        auto g_dense = nn::dense_backward(conv_dense, c.flat, d_conv_features);
        store_dense(conv_dense, g_dense);
        const T slope = static_cast<T>(config_.leaky_slope);
        // Unflatten to the last block's output shape.
        const auto& last = c.blocks.back();
        nn::Shape out_shape = last.pool_argmax.empty() ? last.normalized.shape()
                                                       : nn::Shape{B, conv.back().out_channels(),
                                                                   config_.conv_output_length()};
        Tensor<T> dx = g_dense.input.reshaped(out_shape);
        for (std::size_t i = conv.size(); i-- > 0;) {
            const auto& blk = c.blocks[i];
            if (config_.conv_blocks[i].pool_after) {
                dx = nn::maxpool1d_backward(blk.pool_input_shape, blk.pool_argmax, dx);
            }
            dx = nn::leaky_relu_backward(blk.normalized, dx, slope);
            auto g_bn = nn::batchnorm1d_backward(bn[i], blk.bn, dx);
            store(bn[i].gamma, std::move(g_bn.gamma));
            store(bn[i].beta, std::move(g_bn.beta));
            auto g_conv = nn::conv1d_backward(conv[i], blk.input, g_bn.input);
            store(conv[i].weights, std::move(g_conv.weights));
            store(conv[i].bias, std::move(g_conv.bias));
            dx = std::move(g_conv.input);
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t name_stream(const std::string& name) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : name) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

bool is_weight(const std::string& name) {
    const auto dot = name.rfind('.');
    const std::string leaf = name.substr(dot + 1);
    return leaf == "weight" || leaf.starts_with("w_") || leaf.starts_with("u_");
}

} // namespace

template <typename T>
DualStreamModel<T> build_variant(Variant variant, std::uint64_t seed, const ModelConfig& config) {
    DualStreamModel<T> model(variant, config);
    for (auto& [name, tensor] : model.parameters()) {
        if (is_weight(name)) {
            Rng rng = make_rng(seed, name_stream(name));
            *tensor = nn::glorot_init<T>(tensor->shape(), rng);
        } else if (name.ends_with(".gamma")) {
            tensor->fill(T(1));
        } else {
            tensor->fill(T(0));
        }
    }
    return model;
}

nn::Checkpoint to_checkpoint(DualStreamModel<float>& model) {
    nn::Checkpoint ckpt;
    ckpt.manifest = model.config().to_map();
    ckpt.manifest["variant"] = std::string(variant_key(model.variant()));
    for (auto& [name, tensor] : model.parameters()) {
        ckpt.tensors.push_back({name, Tensor<float>(tensor->shape(), tensor->storage())});
    }
    for (auto& [name, tensor] : model.buffers()) {
        ckpt.tensors.push_back({name, Tensor<float>(tensor->shape(), tensor->storage())});
    }
    return ckpt;
}

DualStreamModel<float> from_checkpoint(const nn::Checkpoint& ckpt) {
    const auto it = ckpt.manifest.find("variant");
    if (it == ckpt.manifest.end()) {
        throw FormatError("checkpoint manifest does not name a model variant");
    }
    DualStreamModel<float> model(parse_variant(it->second), ModelConfig::from_map(ckpt.manifest));
    auto load = [&](std::vector<NamedParameter<float>> items) {
        for (auto& [name, tensor] : items) {
            const Tensor<float>* src = ckpt.find(name);
            if (src == nullptr) {
                throw FormatError("checkpoint lacks tensor '" + name + "'");
            }
            if (src->shape() != tensor->shape()) {
                throw FormatError("checkpoint tensor '" + name + "' has shape " + nn::shape_string(src->shape()) +
                                  ", model expects " + nn::shape_string(tensor->shape()));
            }
            *tensor = Tensor<float>(src->shape(), src->storage());
        }
    };
    load(model.parameters());
    load(model.buffers());
    return model;
}

template <typename T>
void copy_matching_parameters(DualStreamModel<T>& src, DualStreamModel<T>& dst) {
    auto from = src.parameters();
    auto extra = src.buffers();
    from.insert(from.end(), extra.begin(), extra.end());
    auto to = dst.parameters();
    auto to_extra = dst.buffers();
    to.insert(to.end(), to_extra.begin(), to_extra.end());
    for (auto& [name, tensor] : to) {
        for (auto& [src_name, src_tensor] : from) {
            if (src_name == name && src_tensor->shape() == tensor->shape()) {
                *tensor = Tensor<T>(src_tensor->shape(), src_tensor->storage());
            }
        }
    }
}

template class DualStreamModel<float>;
template class DualStreamModel<double>;
template DualStreamModel<float> build_variant(Variant, std::uint64_t, const ModelConfig&);
template DualStreamModel<double> build_variant(Variant, std::uint64_t, const ModelConfig&);
template void copy_matching_parameters(DualStreamModel<float>&, DualStreamModel<float>&);
template void copy_matching_parameters(DualStreamModel<double>&, DualStreamModel<double>&);

} // namespace phonocard
