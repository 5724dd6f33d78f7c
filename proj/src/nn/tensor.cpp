#include "phonocard/nn/tensor.hpp"

namespace phonocard::nn {

std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            s += ", ";
        }
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

template class Tensor<float>;
template class Tensor<double>;

} // namespace phonocard::nn
