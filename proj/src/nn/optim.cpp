#include "phonocard/nn/optim.hpp"

#include <cmath>

namespace phonocard::nn {

template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, AdamState<T>& state, double lr) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i]->size(), T(0));
            state.v[i].assign(params[i]->size(), T(0));
        }
    }
    if (state.m.size() != params.size()) {
        throw ShapeError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                         " tensors, given " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor<T>& p = *params[i];
        if (p.grad().size() != p.size() || state.m[i].size() != p.size()) {
            throw ShapeError("adam_step: gradient or moment buffer does not match parameter " + std::to_string(i) +
                             " of shape " + shape_string(p.shape()));
        }
    }

    ++state.step_count;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    const double step = lr * std::sqrt(c2) / c1;
    const double eps = state.epsilon * std::sqrt(c2);

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor<T>& p = *params[i];
        const auto& g = p.grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = static_cast<double>(g[j]);
            const double mj = b1 * static_cast<double>(m[j]) + (1.0 - b1) * gj;
            const double vj = b2 * static_cast<double>(v[j]) + (1.0 - b2) * gj * gj;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            p[j] = static_cast<T>(static_cast<double>(p[j]) - step * mj / (std::sqrt(vj) + eps));
        }
    }
}

template void adam_step(const std::vector<Tensor<float>*>&, AdamState<float>&, double);
template void adam_step(const std::vector<Tensor<double>*>&, AdamState<double>&, double);

} // namespace phonocard::nn
