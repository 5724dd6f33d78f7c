#include "phonocard/nn/layers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace phonocard::nn {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
CMapR<T> cmat(const Tensor<T>& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
    return CMapR<T>(t.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename T>
MapR<T> mat(Tensor<T>& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
    return MapR<T>(t.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename T>
MapR<T> mat(Buffer<T>& v, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
    return MapR<T>(v.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename T>
CMapR<T> cmat(const Buffer<T>& v, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
    return CMapR<T>(v.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

/// Column buffer (in_channels * kernel) x length for one batch element.
template <typename T>
void im2col(const T* in, std::size_t channels, std::size_t length, std::size_t kernel, std::size_t pad,
            MatR<T>& col) {
    col.setZero();
    for (std::size_t c = 0; c < channels; ++c) {
        const T* row = in + c * length;
        for (std::size_t k = 0; k < kernel; ++k) {
            T* dst = col.data() + (c * kernel + k) * length;
            // output t reads input t + k - pad
            const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(pad);
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(length),
                                                               static_cast<std::ptrdiff_t>(length) - shift);
            for (std::ptrdiff_t t = lo; t < hi; ++t) {
                dst[t] = row[t + shift];
            }
        }
    }
}

template <typename T>
void col2im_add(const MatR<T>& col, std::size_t channels, std::size_t length, std::size_t kernel,
                std::size_t pad, T* out) {
    for (std::size_t c = 0; c < channels; ++c) {
        T* row = out + c * length;
        for (std::size_t k = 0; k < kernel; ++k) {
            const T* src = col.data() + (c * kernel + k) * length;
            const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(pad);
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(length),
                                                               static_cast<std::ptrdiff_t>(length) - shift);
            for (std::ptrdiff_t t = lo; t < hi; ++t) {
                row[t + shift] += src[t];
            }
        }
    }
}

template <typename T>
void check_conv_input(const Conv1dLayer<T>& layer, const Tensor<T>& input) {
    expect_rank(input, 3, "conv1d input");
    if (input.dim(1) != layer.in_channels()) {
        throw ShapeError("conv1d: input has " + std::to_string(input.dim(1)) + " channels, layer expects " +
                         std::to_string(layer.in_channels()));
    }
    if (input.dim(2) == 0) {
        throw ShapeError("conv1d: empty input sequence");
    }
}

} // namespace

template <typename T>
Tensor<T> conv1d_forward(const Conv1dLayer<T>& layer, const Tensor<T>& input) {
    check_conv_input(layer, input);
    const std::size_t B = input.dim(0), C = input.dim(1), L = input.dim(2);
    const std::size_t O = layer.out_channels(), K = layer.kernel();
    Tensor<T> out({B, O, L});
    MatR<T> col(static_cast<Eigen::Index>(C * K), static_cast<Eigen::Index>(L));
    const auto W = cmat(layer.weights, O, C * K);
    const auto bias = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(layer.bias.data(),
                                                                             static_cast<Eigen::Index>(O));
    for (std::size_t b = 0; b < B; ++b) {
        im2col(input.data() + b * C * L, C, L, K, layer.pad_left(), col);
        auto y = mat(out, O, L, b * O * L);
        y.noalias() = W * col;
        y.colwise() += bias;
    }
    return out;
}

template <typename T>
Conv1dGrads<T> conv1d_backward(const Conv1dLayer<T>& layer, const Tensor<T>& input, const Tensor<T>& upstream) {
    check_conv_input(layer, input);
    const std::size_t B = input.dim(0), C = input.dim(1), L = input.dim(2);
    const std::size_t O = layer.out_channels(), K = layer.kernel();
    expect_shape(upstream, {B, O, L}, "conv1d upstream gradient");

    Conv1dGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(layer.weights.shape()), Tensor<T>(layer.bias.shape())};
    MatR<T> col(static_cast<Eigen::Index>(C * K), static_cast<Eigen::Index>(L));
    MatR<T> dcol(static_cast<Eigen::Index>(C * K), static_cast<Eigen::Index>(L));
    const auto W = cmat(layer.weights, O, C * K);
    auto dW = mat(g.weights, O, C * K);
    for (std::size_t b = 0; b < B; ++b) {
        const auto G = cmat(upstream, O, L, b * O * L);
        im2col(input.data() + b * C * L, C, L, K, layer.pad_left(), col);
        dW.noalias() += G * col.transpose();
        dcol.noalias() = W.transpose() * G;
        col2im_add(dcol, C, L, K, layer.pad_left(), g.input.data() + b * C * L);
        for (std::size_t o = 0; o < O; ++o) {
            g.bias[o] += G.row(static_cast<Eigen::Index>(o)).sum();
        }
    }
    return g;
}

template <typename T>
Tensor<T> batchnorm1d_forward(BatchNorm1dLayer<T>& layer, const Tensor<T>& input, Mode mode,
                              std::type_identity_t<BatchNormCache<T>>* cache) {
    expect_rank(input, 3, "batchnorm1d input");
    const std::size_t B = input.dim(0), C = input.dim(1), L = input.dim(2);
    if (C != layer.channels()) {
        throw ShapeError("batchnorm1d: channel mismatch");
    }
    const std::size_t N = B * L;
    Buffer<T> mean(C), inv_std(C);
    if (mode == Mode::Train) {
        if (N < 2) {
            throw DegenerateBatch("batchnorm1d in Train mode needs at least two values per channel");
        }
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const T* row = input.data() + (b * C + c) * L;
                for (std::size_t t = 0; t < L; ++t) {
                    s += static_cast<double>(row[t]);
                }
            }
            const double mu = s / static_cast<double>(N);
            double v = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const T* row = input.data() + (b * C + c) * L;
                for (std::size_t t = 0; t < L; ++t) {
                    const double d = static_cast<double>(row[t]) - mu;
                    v += d * d;
                }
            }
            const double var = v / static_cast<double>(N);
            mean[c] = static_cast<T>(mu);
            inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(layer.epsilon)));
            const double unbiased = v / static_cast<double>(N - 1);
            layer.running_mean[c] = static_cast<T>((1.0 - layer.momentum) * layer.running_mean[c] + layer.momentum * mu);
            layer.running_var[c] =
                static_cast<T>((1.0 - layer.momentum) * layer.running_var[c] + layer.momentum * unbiased);
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            mean[c] = layer.running_mean[c];
            inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(layer.running_var[c]) +
                                                        static_cast<double>(layer.epsilon)));
        }
    }

    Tensor<T> normalized(input.shape());
    Tensor<T> out(input.shape());
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t off = (b * C + c) * L;
            const T mu = mean[c], is = inv_std[c], g = layer.gamma[c], be = layer.beta[c];
            for (std::size_t t = 0; t < L; ++t) {
                const T xh = (input[off + t] - mu) * is;
                normalized[off + t] = xh;
                out[off + t] = g * xh + be;
            }
        }
    }
    if (cache != nullptr) {
        cache->mode = mode;
        cache->normalized = std::move(normalized);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

template <typename T>
BatchNormGrads<T> batchnorm1d_backward(const BatchNorm1dLayer<T>& layer, const BatchNormCache<T>& cache,
                                       const Tensor<T>& upstream) {
    const auto& xh = cache.normalized;
    if (upstream.shape() != xh.shape() || xh.rank() != 3 || xh.dim(1) != layer.channels()) {
        throw StateError("batchnorm1d_backward: cache does not match upstream gradient");
    }
    const std::size_t B = xh.dim(0), C = xh.dim(1), L = xh.dim(2);
    const auto N = static_cast<T>(B * L);
    BatchNormGrads<T> g{Tensor<T>(xh.shape()), Tensor<T>({C}), Tensor<T>({C})};
    for (std::size_t c = 0; c < C; ++c) {
        T sum_g = 0, sum_gx = 0;
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * L;
            for (std::size_t t = 0; t < L; ++t) {
                sum_g += upstream[off + t];
                sum_gx += upstream[off + t] * xh[off + t];
            }
        }
        g.beta[c] = sum_g;
        g.gamma[c] = sum_gx;
        const T gamma = layer.gamma[c];
        const T is = cache.inv_std[c];
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * L;
            for (std::size_t t = 0; t < L; ++t) {
                if (cache.mode == Mode::Train) {
                    // d/dx of gamma * (x - mean) * inv_std with batch statistics
                    g.input[off + t] =
                        gamma * is / N * (N * upstream[off + t] - sum_g - xh[off + t] * sum_gx);
                } else {
                    g.input[off + t] = gamma * is * upstream[off + t];
                }
            }
        }
    }
    return g;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& input, T slope) {
    Tensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        out[i] = input[i] > T(0) ? input[i] : slope * input[i];
    }
    return out;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& input, const Tensor<T>& upstream, T slope) {
    expect_shape(upstream, input.shape(), "leaky_relu upstream");
    Tensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        out[i] = input[i] > T(0) ? upstream[i] : slope * upstream[i];
    }
    return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
    return leaky_relu(input, T(0));
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream) {
    return leaky_relu_backward(input, upstream, T(0));
}

template <typename T>
T sigmoid_scalar(T x) {
    if (x >= T(0)) {
        return T(1) / (T(1) + std::exp(-x));
    }
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        out[i] = sigmoid_scalar(input[i]);
    }
    return out;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& upstream) {
    expect_shape(upstream, output.shape(), "sigmoid upstream");
    Tensor<T> out(output.shape());
    for (std::size_t i = 0; i < output.size(); ++i) {
        out[i] = upstream[i] * output[i] * (T(1) - output[i]);
    }
    return out;
}

template <typename T>
PoolResult<T> maxpool1d(const Tensor<T>& input, std::size_t pool, std::size_t stride) {
    if (input.rank() < 1 || pool == 0 || stride == 0) {
        throw ShapeError("maxpool1d: bad input or window");
    }
    const std::size_t L = input.shape().back();
    if (L < pool) {
        throw ShapeError("maxpool1d: length " + std::to_string(L) + " shorter than window " + std::to_string(pool));
    }
    const std::size_t rows = input.size() / L;
    const std::size_t out_len = (L - pool) / stride + 1;
    Shape shape = input.shape();
    shape.back() = out_len;
    PoolResult<T> res{Tensor<T>(shape), std::vector<std::size_t>(rows * out_len)};
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = input.data() + r * L;
        for (std::size_t j = 0; j < out_len; ++j) {
            std::size_t best = j * stride;
            for (std::size_t k = best + 1; k < j * stride + pool; ++k) {
                if (row[k] > row[best]) {
                    best = k;
                }
            }
            res.output[r * out_len + j] = row[best];
            res.argmax[r * out_len + j] = best;
        }
    }
    return res;
}

template <typename T>
Tensor<T> maxpool1d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                             const Tensor<T>& upstream) {
    if (upstream.size() != argmax.size() || input_shape.empty() ||
        upstream.size() % (shape_size(input_shape) / input_shape.back()) != 0) {
        throw ShapeError("maxpool1d_backward: argmax does not match upstream gradient");
    }
    Tensor<T> g(input_shape);
    const std::size_t L = input_shape.back();
    const std::size_t out_len = upstream.shape().back();
    for (std::size_t i = 0; i < upstream.size(); ++i) {
        const std::size_t r = i / out_len;
        g[r * L + argmax[i]] += upstream[i];
    }
    return g;
}

template <typename T>
Tensor<T> dense_forward(const DenseLayer<T>& layer, const Tensor<T>& input) {
    expect_rank(input, 2, "dense input");
    if (input.dim(1) != layer.in_features()) {
        throw ShapeError("dense: input has " + std::to_string(input.dim(1)) + " features, layer expects " +
                         std::to_string(layer.in_features()));
    }
    const std::size_t B = input.dim(0), I = layer.in_features(), O = layer.out_features();
    Tensor<T> out({B, O});
    auto y = mat(out, B, O);
    y.noalias() = cmat(input, B, I) * cmat(layer.weights, O, I).transpose();
    y.rowwise() += Eigen::Map<const RowVec<T>>(layer.bias.data(), static_cast<Eigen::Index>(O));
    return out;
}

template <typename T>
DenseGrads<T> dense_backward(const DenseLayer<T>& layer, const Tensor<T>& input, const Tensor<T>& upstream) {
    expect_rank(input, 2, "dense input");
    const std::size_t B = input.dim(0), I = layer.in_features(), O = layer.out_features();
    if (input.dim(1) != I) {
        throw ShapeError("dense_backward: input feature mismatch");
    }
    expect_shape(upstream, {B, O}, "dense upstream gradient");
    DenseGrads<T> g{Tensor<T>({B, I}), Tensor<T>({O, I}), Tensor<T>({O})};
    const auto G = cmat(upstream, B, O);
    mat(g.input, B, I).noalias() = G * cmat(layer.weights, O, I);
    mat(g.weights, O, I).noalias() = G.transpose() * cmat(input, B, I);
    Eigen::Map<RowVec<T>>(g.bias.data(), static_cast<Eigen::Index>(O)) = G.colwise().sum();
    return g;
}

template <typename T>
GruOutput<T> gru_forward(const GruLayer<T>& layer, const Tensor<T>& inputs, const std::type_identity_t<Tensor<T>>* h0,
                         std::type_identity_t<GruCache<T>>* cache, bool return_states) {
    expect_rank(inputs, 3, "gru input");
    const std::size_t B = inputs.dim(0), S = inputs.dim(1), F = inputs.dim(2), H = layer.hidden();
    if (F != layer.input_size()) {
        throw ShapeError("gru: input has " + std::to_string(F) + " features, layer expects " +
                         std::to_string(layer.input_size()));
    }
    if (h0 != nullptr) {
        expect_shape(*h0, {B, H}, "gru initial state");
    }

    // Input projections for every (batch, step) row at once.
    const auto X = cmat(inputs, B * S, F);
    const MatR<T> xz = X * cmat(layer.w_z, H, F).transpose();
    const MatR<T> xr = X * cmat(layer.w_r, H, F).transpose();
    const MatR<T> xh = X * cmat(layer.w_h, H, F).transpose();
    const auto Uz = cmat(layer.u_z, H, H);
    const auto Ur = cmat(layer.u_r, H, H);
    const auto Uh = cmat(layer.u_h, H, H);

    Buffer<T> states((S + 1) * B * H, T(0));
    Buffer<T> zs(S * B * H), rs(S * B * H), cs(S * B * H);
    if (h0 != nullptr) {
        std::copy(h0->values().begin(), h0->values().end(), states.begin());
    }
    MatR<T> az(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(H));
    MatR<T> ar(az.rows(), az.cols()), ah(az.rows(), az.cols()), rh(az.rows(), az.cols());

    for (std::size_t t = 0; t < S; ++t) {
        const auto hp = cmat(states, B, H, t * B * H);
        az.noalias() = hp * Uz.transpose();
        ar.noalias() = hp * Ur.transpose();
        T* z = zs.data() + t * B * H;
        T* r = rs.data() + t * B * H;
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t row = b * S + t;
            for (std::size_t j = 0; j < H; ++j) {
                const auto e = static_cast<Eigen::Index>(j);
                const auto bi = static_cast<Eigen::Index>(b);
                z[b * H + j] = sigmoid_scalar(az(bi, e) + xz(static_cast<Eigen::Index>(row), e) + layer.b_z[j]);
                r[b * H + j] = sigmoid_scalar(ar(bi, e) + xr(static_cast<Eigen::Index>(row), e) + layer.b_r[j]);
                rh(bi, e) = r[b * H + j] * hp(bi, e);
            }
        }
        ah.noalias() = rh * Uh.transpose();
        T* c = cs.data() + t * B * H;
        T* hn = states.data() + (t + 1) * B * H;
        const T* hprev = states.data() + t * B * H;
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t row = b * S + t;
            for (std::size_t j = 0; j < H; ++j) {
                const std::size_t i = b * H + j;
                c[i] = std::tanh(ah(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) +
                                 xh(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) + layer.b_h[j]);
                hn[i] = (T(1) - z[i]) * hprev[i] + z[i] * c[i];
            }
        }
    }

    GruOutput<T> out;
    out.final_state = Tensor<T>({B, H}, Buffer<T>(states.begin() + static_cast<std::ptrdiff_t>(S * B * H),
                                                        states.end()));
    if (return_states) {
        out.states = Tensor<T>({B, S, H});
        for (std::size_t t = 0; t < S; ++t) {
            for (std::size_t b = 0; b < B; ++b) {
                std::copy_n(states.data() + (t + 1) * B * H + b * H, H, out.states.data() + (b * S + t) * H);
            }
        }
    }
    if (cache != nullptr) {
        cache->batch = B;
        cache->steps = S;
        cache->input = F;
        cache->hidden = H;
        cache->inputs = inputs;
        cache->states = std::move(states);
        cache->z = std::move(zs);
        cache->r = std::move(rs);
        cache->candidate = std::move(cs);
    }
    return out;
}

template <typename T>
GruGrads<T> gru_backward(const GruLayer<T>& layer, const GruCache<T>& cache,
                         const std::type_identity_t<Tensor<T>>* upstream_states,
                         const std::type_identity_t<Tensor<T>>* upstream_final) {
    const std::size_t B = cache.batch, S = cache.steps, F = cache.input, H = cache.hidden;
    if (H != layer.hidden() || F != layer.input_size() || cache.states.size() != (S + 1) * B * H ||
        cache.z.size() != S * B * H || cache.inputs.size() != B * S * F) {
        throw StateError("gru_backward: cache does not come from a matching forward pass");
    }
    if (upstream_states != nullptr && !upstream_states->empty()) {
        expect_shape(*upstream_states, {B, S, H}, "gru upstream states");
    } else {
        upstream_states = nullptr;
    }
    if (upstream_final != nullptr) {
        expect_shape(*upstream_final, {B, H}, "gru upstream final state");
    }

    GruGrads<T> g;
    g.inputs = Tensor<T>({B, S, F});
    g.h0 = Tensor<T>({B, H});
    g.w_z = Tensor<T>({H, F});
    g.w_r = Tensor<T>({H, F});
    g.w_h = Tensor<T>({H, F});
    g.u_z = Tensor<T>({H, H});
    g.u_r = Tensor<T>({H, H});
    g.u_h = Tensor<T>({H, H});
    g.b_z = Tensor<T>({H});
    g.b_r = Tensor<T>({H});
    g.b_h = Tensor<T>({H});

    const auto Uz = cmat(layer.u_z, H, H);
    const auto Ur = cmat(layer.u_r, H, H);
    const auto Uh = cmat(layer.u_h, H, H);
    auto dUz = mat(g.u_z, H, H);
    auto dUr = mat(g.u_r, H, H);
    auto dUh = mat(g.u_h, H, H);

    // Pre-activation gradients, rows ordered (batch, step) like the inputs.
    MatR<T> daz_all(static_cast<Eigen::Index>(B * S), static_cast<Eigen::Index>(H));
    MatR<T> dar_all(daz_all.rows(), daz_all.cols()), dah_all(daz_all.rows(), daz_all.cols());

    const auto Bi = static_cast<Eigen::Index>(B), Hi = static_cast<Eigen::Index>(H);
    MatR<T> dh(Bi, Hi), dhp(Bi, Hi), daz(Bi, Hi), dar(Bi, Hi), dah(Bi, Hi), drh(Bi, Hi), rh(Bi, Hi);
    dh.setZero();
    if (upstream_final != nullptr) {
        dh = cmat(*upstream_final, B, H);
    }

    for (std::size_t t = S; t-- > 0;) {
        if (upstream_states != nullptr) {
            for (std::size_t b = 0; b < B; ++b) {
                for (std::size_t j = 0; j < H; ++j) {
                    dh(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) +=
                        (*upstream_states)[(b * S + t) * H + j];
                }
            }
        }
        const T* hp = cache.states.data() + t * B * H;
        const T* z = cache.z.data() + t * B * H;
        const T* r = cache.r.data() + t * B * H;
        const T* c = cache.candidate.data() + t * B * H;
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j = 0; j < H; ++j) {
                const std::size_t i = b * H + j;
                const auto bi = static_cast<Eigen::Index>(b), e = static_cast<Eigen::Index>(j);
                const T d = dh(bi, e);
                const T dc = d * z[i];
                const T dz = d * (c[i] - hp[i]);
                dhp(bi, e) = d * (T(1) - z[i]);
                dah(bi, e) = dc * (T(1) - c[i] * c[i]);
                daz(bi, e) = dz * z[i] * (T(1) - z[i]);
                rh(bi, e) = r[i] * hp[i];
            }
        }
        drh.noalias() = dah * Uh;
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j = 0; j < H; ++j) {
                const std::size_t i = b * H + j;
                const auto bi = static_cast<Eigen::Index>(b), e = static_cast<Eigen::Index>(j);
                const T dr = drh(bi, e) * hp[i];
                dhp(bi, e) += drh(bi, e) * r[i];
                dar(bi, e) = dr * r[i] * (T(1) - r[i]);
            }
        }
        const auto hprev = cmat(cache.states, B, H, t * B * H);
        dhp.noalias() += daz * Uz;
        dhp.noalias() += dar * Ur;
        dUz.noalias() += daz.transpose() * hprev;
        dUr.noalias() += dar.transpose() * hprev;
        dUh.noalias() += dah.transpose() * rh;
        for (std::size_t b = 0; b < B; ++b) {
            const auto row = static_cast<Eigen::Index>(b * S + t);
            daz_all.row(row) = daz.row(static_cast<Eigen::Index>(b));
            dar_all.row(row) = dar.row(static_cast<Eigen::Index>(b));
            dah_all.row(row) = dah.row(static_cast<Eigen::Index>(b));
        }
        dh.swap(dhp);
    }
    mat(g.h0, B, H) = dh;

    const auto X = cmat(cache.inputs, B * S, F);
    mat(g.w_z, H, F).noalias() = daz_all.transpose() * X;
    mat(g.w_r, H, F).noalias() = dar_all.transpose() * X;
    mat(g.w_h, H, F).noalias() = dah_all.transpose() * X;
    auto dX = mat(g.inputs, B * S, F);
    dX.noalias() = daz_all * cmat(layer.w_z, H, F);
    dX.noalias() += dar_all * cmat(layer.w_r, H, F);
    dX.noalias() += dah_all * cmat(layer.w_h, H, F);
    Eigen::Map<RowVec<T>>(g.b_z.data(), Hi) = daz_all.colwise().sum();
    Eigen::Map<RowVec<T>>(g.b_r.data(), Hi) = dar_all.colwise().sum();
    Eigen::Map<RowVec<T>>(g.b_h.data(), Hi) = dah_all.colwise().sum();
    return g;
}

template <typename T>
LossResult<T> bce_loss(const Tensor<T>& probabilities, const Tensor<T>& targets) {
    if (probabilities.size() != targets.size() || probabilities.empty()) {
        throw ShapeError("bce_loss: probabilities and targets differ in size or are empty");
    }
    constexpr double lo = 1e-7;
    const std::size_t n = probabilities.size();
    LossResult<T> res;
    res.grad = Tensor<T>(probabilities.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = static_cast<double>(targets[i]);
        if (y != 0.0 && y != 1.0) {
            throw LabelError("bce_loss: target " + std::to_string(y) + " outside {0, 1}");
        }
        const double p = std::clamp(static_cast<double>(probabilities[i]), lo, 1.0 - lo);
        total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        res.grad[i] = static_cast<T>((p - y) / (p * (1.0 - p)) / static_cast<double>(n));
    }
    res.loss = static_cast<T>(total / static_cast<double>(n));
    return res;
}

template <typename T>
Tensor<T> bce_logit_grad(const Tensor<T>& probabilities, const Tensor<T>& targets) {
    if (probabilities.size() != targets.size() || probabilities.empty()) {
        throw ShapeError("bce_logit_grad: probabilities and targets differ in size or are empty");
    }
    const double n = static_cast<double>(probabilities.size());
    Tensor<T> g(probabilities.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = static_cast<double>(targets[i]);
        if (y != 0.0 && y != 1.0) {
            throw LabelError("bce_logit_grad: target " + std::to_string(y) + " outside {0, 1}");
        }
        g[i] = static_cast<T>((static_cast<double>(probabilities[i]) - y) / n);
    }
    return g;
}

double glorot_bound(const Shape& shape) {
    double fan_in = 1.0, fan_out = 1.0;
    if (shape.size() == 2) {
        fan_out = static_cast<double>(shape[0]);
        fan_in = static_cast<double>(shape[1]);
    } else if (shape.size() == 3) {
        fan_out = static_cast<double>(shape[0] * shape[2]);
        fan_in = static_cast<double>(shape[1] * shape[2]);
    } else if (shape.size() == 1) {
        fan_in = fan_out = static_cast<double>(shape[0]);
    }
    return std::sqrt(6.0 / (fan_in + fan_out));
}

template <typename T>
Tensor<T> glorot_init(const Shape& shape, Rng& rng) {
    const double bound = glorot_bound(shape);
    Tensor<T> t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<T>(uniform(rng, -bound, bound));
    }
    return t;
}

#define PHONOCARD_INSTANTIATE_LAYERS(T)                                                                         \
    template Tensor<T> conv1d_forward(const Conv1dLayer<T>&, const Tensor<T>&);                                 \
    template Conv1dGrads<T> conv1d_backward(const Conv1dLayer<T>&, const Tensor<T>&, const Tensor<T>&);         \
    template Tensor<T> batchnorm1d_forward(BatchNorm1dLayer<T>&, const Tensor<T>&, Mode, BatchNormCache<T>*);   \
    template BatchNormGrads<T> batchnorm1d_backward(const BatchNorm1dLayer<T>&, const BatchNormCache<T>&,       \
                                                    const Tensor<T>&);                                          \
    template Tensor<T> leaky_relu(const Tensor<T>&, T);                                                         \
    template Tensor<T> leaky_relu_backward(const Tensor<T>&, const Tensor<T>&, T);                              \
    template Tensor<T> relu(const Tensor<T>&);                                                                  \
    template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                       \
    template T sigmoid_scalar(T);                                                                               \
    template Tensor<T> sigmoid(const Tensor<T>&);                                                               \
    template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);                                    \
    template PoolResult<T> maxpool1d(const Tensor<T>&, std::size_t, std::size_t);                               \
    template Tensor<T> maxpool1d_backward(const Shape&, const std::vector<std::size_t>&, const Tensor<T>&);      \
    template Tensor<T> dense_forward(const DenseLayer<T>&, const Tensor<T>&);                                   \
    template DenseGrads<T> dense_backward(const DenseLayer<T>&, const Tensor<T>&, const Tensor<T>&);            \
    template GruOutput<T> gru_forward(const GruLayer<T>&, const Tensor<T>&, const Tensor<T>*, GruCache<T>*,     \
                                      bool);                                                                    \
    template GruGrads<T> gru_backward(const GruLayer<T>&, const GruCache<T>&, const Tensor<T>*,                 \
                                      const Tensor<T>*);                                                        \
    template LossResult<T> bce_loss(const Tensor<T>&, const Tensor<T>&);                                        \
    template Tensor<T> bce_logit_grad(const Tensor<T>&, const Tensor<T>&);                                      \
    template Tensor<T> glorot_init(const Shape&, Rng&);

PHONOCARD_INSTANTIATE_LAYERS(float)
PHONOCARD_INSTANTIATE_LAYERS(double)

#undef PHONOCARD_INSTANTIATE_LAYERS

} // namespace phonocard::nn
