#pragma once

#include "phonocard/nn/tensor.hpp"

#include <cstdint>
#include <vector>

namespace phonocard::nn {

template <typename T>
struct AdamState {
    std::vector<Buffer<T>> m;
    std::vector<Buffer<T>> v;
    std::uint64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One Adam update over every parameter tensor, reading each tensor's own
/// grad buffer. Moment buffers are allocated on the first call.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, AdamState<T>& state, double lr);

} // namespace phonocard::nn
