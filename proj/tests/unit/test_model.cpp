#include "phonocard/model.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace phonocard;
using phonocard::testing::model_gradient_error;
using phonocard::testing::random_model_input;
using phonocard::testing::random_tensor;

namespace {

void saturate_mask(DualStreamModel<double>& m, double bias) {
    m.attention_out.weights.fill(0.0);
    m.attention_out.bias.fill(bias);
}

} // namespace

TEST(ModelConfig, StandardGeometry) {
    const auto c = ModelConfig::standard();
    ASSERT_EQ(c.conv_blocks.size(), 6u);
    EXPECT_EQ(std::count_if(c.conv_blocks.begin(), c.conv_blocks.end(), [](const auto& b) { return b.pool_after; }), 4);
    EXPECT_EQ(c.conv_output_length(), 156u);
    EXPECT_EQ(c.flatten_size(), 39936u);
    EXPECT_EQ(ModelConfig::from_map(c.to_map()), c);
    EXPECT_EQ(ModelConfig::reduced().conv_output_length(), 6u);
}

TEST(Variants, KeysAndTitles) {
    for (Variant v : kAllVariants) EXPECT_EQ(parse_variant(variant_key(v)), v);
    EXPECT_EQ(parse_variant("FULL"), Variant::Full);
    EXPECT_EQ(variant_title(Variant::Full), "Proposed Method");
    EXPECT_EQ(variant_title(Variant::RnnRaw), "Recurrent Stream with Raw Data");
    EXPECT_THROW(parse_variant("lstm"), ConfigError);
}

TEST(Model, StandardStreamShapes) {
    auto m = build_variant<float>(Variant::Full, 1);
    Rng rng = make_rng(2);
    nn::Tensor<float> wave({2, 1, 2500});
    for (std::size_t i = 0; i < wave.size(); ++i) wave[i] = static_cast<float>(2.0 * uniform01(rng));
    const auto cf = m.conv_stream(wave);
    EXPECT_EQ(cf.shape(), (nn::Shape{2, 64}));
    nn::Tensor<float> mf({3, 18, 13});
    for (std::size_t i = 0; i < mf.size(); ++i) mf[i] = static_cast<float>(normal01(rng));
    const auto rf = m.recurrent_stream(mf);
    EXPECT_EQ(rf.shape(), (nn::Shape{3, 64}));
    for (float v : cf.storage()) EXPECT_TRUE(std::isfinite(v));
    EXPECT_THROW(m.conv_stream(nn::Tensor<float>({1, 1, 2400})), ShapeError);
}

TEST(Model, OutputsAreProbabilitiesForEveryVariant) {
    const auto cfg = ModelConfig::reduced();
    for (Variant v : kAllVariants) {
        auto m = build_variant<double>(v, 3, cfg);
        Rng rng = make_rng(4);
        const auto p = m.forward(random_model_input(cfg, 4, rng), nn::Mode::Eval);
        ASSERT_EQ(p.shape(), (nn::Shape{4, 1})) << variant_key(v);
        for (double x : p.storage()) {
            EXPECT_GT(x, 0.0);
            EXPECT_LT(x, 1.0);
        }
    }
}

TEST(Model, RnnRawAcceptsFullLengthSequence) {
    auto m = build_variant<float>(Variant::RnnRaw, 5);
    ModelInput<float> in;
    in.raw_sequence = nn::Tensor<float>({1, 2500, 1}, 0.1f);
    EXPECT_NO_THROW(m.forward(in, nn::Mode::Eval));
}

TEST(Model, MissingInputForVariantIsConfigError) {
    const auto cfg = ModelConfig::reduced();
    Rng rng = make_rng(6);
    auto full = random_model_input(cfg, 2, rng);
    auto m = build_variant<double>(Variant::Full, 6, cfg);
    auto no_mfcc = full;
    no_mfcc.mfcc = {};
    EXPECT_THROW(m.forward(no_mfcc, nn::Mode::Eval), ConfigError);
    auto conv = build_variant<double>(Variant::ConvOnly, 6, cfg);
    auto no_wave = full;
    no_wave.waveform = {};
    EXPECT_THROW(conv.forward(no_wave, nn::Mode::Eval), ConfigError);
    // ConvOnly ignores the MFCC tensor entirely.
    auto wave_only = full;
    wave_only.mfcc = {};
    wave_only.raw_sequence = {};
    EXPECT_NO_THROW(conv.forward(wave_only, nn::Mode::Eval));
}

TEST(Model, ZeroRecurrentPathYieldsDenseBias) {
    auto m = build_variant<double>(Variant::RnnMfcc, 7, ModelConfig::reduced());
    for (auto* t : {&m.gru.w_z, &m.gru.w_r, &m.gru.w_h, &m.gru.u_z, &m.gru.u_r, &m.gru.u_h, &m.gru.b_z, &m.gru.b_r,
                    &m.gru.b_h}) {
        t->fill(0.0);
    }
    Rng rng = make_rng(7);
    m.rnn_dense.bias = random_tensor({64}, rng);
    const auto out = m.recurrent_stream(nn::Tensor<double>({2, 18, 13}));
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t j = 0; j < 64; ++j) EXPECT_EQ(out.at(b, j), m.rnn_dense.bias[j]);
}

TEST(Model, RecurrentStreamDependsOnFrameOrder) {
    auto m = build_variant<double>(Variant::RnnMfcc, 8, ModelConfig::reduced());
    Rng rng = make_rng(8);
    const auto x = random_tensor({1, 18, 13}, rng);
    nn::Tensor<double> rev(x.shape());
    for (std::size_t t = 0; t < 18; ++t)
        for (std::size_t c = 0; c < 13; ++c) rev.at(0, t, c) = x.at(0, 17 - t, c);
    const auto a = m.recurrent_stream(x);
    const auto b = m.recurrent_stream(rev);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    EXPECT_GT(diff, 1e-6);
}

TEST(Attention, MaskStaysInOpenUnitInterval) {
    const auto cfg = ModelConfig::reduced();
    auto m = build_variant<double>(Variant::Full, 9, cfg);
    Rng rng = make_rng(9);
    ForwardCache<double> cache;
    m.forward(random_model_input(cfg, 8, rng), nn::Mode::Eval, &cache);
    ASSERT_EQ(cache.mask.shape(), (nn::Shape{8, 128}));
    for (double v : cache.mask.storage()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Attention, SaturatedOpenMaskReducesToNoAttention) {
    const auto cfg = ModelConfig::reduced();
    auto full = build_variant<double>(Variant::Full, 10, cfg);
    auto plain = build_variant<double>(Variant::DualNoAttention, 10, cfg);
    saturate_mask(full, 40.0);
    Rng rng = make_rng(10);
    const auto in = random_model_input(cfg, 6, rng);
    const auto a = full.forward(in, nn::Mode::Eval);
    const auto b = plain.forward(in, nn::Mode::Eval);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
}

TEST(Attention, SaturatedClosedMaskGivesConstantOutput) {
    const auto cfg = ModelConfig::reduced();
    auto m = build_variant<double>(Variant::Full, 11, cfg);
    saturate_mask(m, -40.0);
    m.head_hidden.bias.fill(0.1);
    Rng rng = make_rng(11);
    const auto p = m.forward(random_model_input(cfg, 5, rng), nn::Mode::Eval);
    // head(0): hidden = relu(b1), out = sigmoid(W2 relu(b1) + b2).
    double logit = m.head_out.bias[0];
    for (std::size_t j = 0; j < cfg.head_hidden; ++j) logit += m.head_out.weights.at(0, j) * 0.1;
    const double expect = 1.0 / (1.0 + std::exp(-logit));
    for (double v : p.storage()) EXPECT_NEAR(v, expect, 1e-12);
}

TEST(Gradients, ReducedModelMatchesFiniteDifferences) {
    for (Variant v : kAllVariants) {
        EXPECT_LT(model_gradient_error(v, 12), 1e-4) << variant_key(v);
    }
}

TEST(Gradients, ZeroUpstreamGivesZeroGradients) {
    const auto cfg = ModelConfig::reduced();
    auto m = build_variant<double>(Variant::Full, 13, cfg);
    Rng rng = make_rng(13);
    ForwardCache<double> cache;
    m.forward(random_model_input(cfg, 3, rng), nn::Mode::Train, &cache);
    m.backward(cache, nn::Tensor<double>({3, 1}));
    for (auto& p : m.parameters()) {
        ASSERT_EQ(p.tensor->grad().size(), p.tensor->size()) << p.name;
        for (double g : p.tensor->grad()) EXPECT_EQ(g, 0.0) << p.name;
    }
}

TEST(Gradients, LogitEntryMatchesProbabilityEntry) {
    const auto cfg = ModelConfig::reduced();
    auto a = build_variant<double>(Variant::Full, 21, cfg);
    auto b = build_variant<double>(Variant::Full, 21, cfg);
    Rng rng = make_rng(21);
    const auto in = random_model_input(cfg, 3, rng);
    const auto up = random_tensor({3, 1}, rng);
    ForwardCache<double> ca, cb;
    const auto p = a.forward(in, nn::Mode::Train, &ca);
    b.forward(in, nn::Mode::Train, &cb);
    a.zero_grad();
    b.zero_grad();
    a.backward(ca, up);
    b.backward_from_logits(cb, nn::sigmoid_backward(p, up));
    auto pa = a.parameters();
    auto pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i].tensor->grad(), pb[i].tensor->grad()) << pa[i].name;
}

TEST(Gradients, BackwardWithoutCacheIsStateError) {
    auto m = build_variant<double>(Variant::Full, 14, ModelConfig::reduced());
    EXPECT_THROW(m.backward(ForwardCache<double>{}, nn::Tensor<double>({1, 1})), StateError);
}

TEST(Parameters, EveryTensorNamedOnceAndGetsGradient) {
    const auto cfg = ModelConfig::reduced();
    auto m = build_variant<double>(Variant::Full, 15, cfg);
    Rng rng = make_rng(15);
    ForwardCache<double> cache;
    m.forward(random_model_input(cfg, 2, rng), nn::Mode::Train, &cache);
    m.backward(cache, nn::Tensor<double>({2, 1}, 1.0));
    std::set<std::string> names;
    std::set<const void*> tensors;
    for (auto& p : m.parameters()) {
        EXPECT_TRUE(names.insert(p.name).second) << p.name;
        EXPECT_TRUE(tensors.insert(p.tensor).second) << p.name;
        EXPECT_EQ(p.tensor->grad().size(), p.tensor->size()) << p.name;
    }
    // 6 conv + 6 bn tensors x2, conv_dense 2, gru 9, rnn_dense 2, attention 4, head 4.
    EXPECT_EQ(names.size(), 24u + 2u + 9u + 2u + 4u + 4u);
}

TEST(Parameters, FullCensusMatchesClosedForm) {
    auto m = build_variant<float>(Variant::Full, 16);
    const std::size_t kernels[] = {32, 16, 8, 8, 8, 4};
    const std::size_t filters[] = {16, 32, 64, 64, 128, 256};
    std::size_t expect = 0, in = 1;
    for (int i = 0; i < 6; ++i) {
        expect += in * filters[i] * kernels[i] + filters[i];  // conv
        expect += 2 * filters[i];                             // batch norm
        in = filters[i];
    }
    expect += 156 * 256 * 64 + 64;               // conv dense
    expect += 3 * (13 * 128 + 128 * 128 + 128);  // GRU
    expect += 128 * 64 + 64;                     // rnn dense
    expect += 128 * 64 + 64 + 64 * 128 + 128;    // attention
    expect += 128 * 32 + 32 + 32 + 1;            // head
    EXPECT_EQ(m.parameter_count(), expect);
}

TEST(Init, SameSeedSameCheckpointDifferentSeedDiffers) {
    auto a = build_variant<float>(Variant::Full, 17);
    auto b = build_variant<float>(Variant::Full, 17);
    auto c = build_variant<float>(Variant::Full, 18);
    EXPECT_EQ(nn::serialize(to_checkpoint(a)), nn::serialize(to_checkpoint(b)));
    EXPECT_NE(nn::serialize(to_checkpoint(a)), nn::serialize(to_checkpoint(c)));
}

TEST(Init, SharedNamesShareInitialValuesAcrossVariants) {
    auto full = build_variant<float>(Variant::Full, 19);
    auto conv = build_variant<float>(Variant::ConvOnly, 19);
    EXPECT_EQ(full.conv[3].weights, conv.conv[3].weights);
    EXPECT_EQ(full.conv_dense.weights, conv.conv_dense.weights);
    for (float v : full.conv[0].bias.storage()) EXPECT_EQ(v, 0.0f);
    for (float v : full.bn[0].gamma.storage()) EXPECT_EQ(v, 1.0f);
}

TEST(Checkpoint, ModelRoundTripIsExact) {
    const auto cfg = ModelConfig::reduced();
    auto m = build_variant<float>(Variant::Full, 20, cfg);
    // Move running statistics away from their defaults first.
    Rng rng = make_rng(20);
    const auto in = random_model_input(cfg, 4, rng);
    ModelInput<float> fin{nn::cast<float>(in.waveform), nn::cast<float>(in.raw_sequence), nn::cast<float>(in.mfcc)};
    m.forward(fin, nn::Mode::Train);
    const auto ckpt = to_checkpoint(m);
    EXPECT_EQ(ckpt.manifest.at("variant"), "full");
    auto back = from_checkpoint(nn::deserialize(nn::serialize(ckpt)));
    EXPECT_EQ(back.config(), cfg);
    EXPECT_EQ(to_checkpoint(back), ckpt);
    EXPECT_EQ(back.forward(fin, nn::Mode::Eval), m.forward(fin, nn::Mode::Eval));
}
