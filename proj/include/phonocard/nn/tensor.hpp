#pragma once

#include "phonocard/error.hpp"

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace phonocard::nn {

using Shape = std::vector<std::size_t>;

inline constexpr std::size_t kBufferAlignment = 64;

/// Eigen picks its vectorised summation order from the data address, so
/// every numeric buffer starts on the same boundary to keep runs bitwise
/// reproducible.
template <typename T>
struct AlignedAllocator {
    using value_type = T;

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kBufferAlignment}));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kBufferAlignment}); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept {
        return true;
    }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array with an optional gradient buffer of the same shape.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0))
        : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

    Tensor(Shape shape, std::initializer_list<T> values) : Tensor(std::move(shape), Buffer<T>(values)) {}

    Tensor(Shape shape, std::span<const T> values) : Tensor(std::move(shape), Buffer<T>(values.begin(), values.end())) {}

    Tensor(Shape shape, Buffer<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
        if (values_.size() != shape_size(shape_)) {
            throw ShapeError("tensor of shape " + shape_string(shape_) + " given " +
                             std::to_string(values_.size()) + " values");
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    T* data() noexcept { return values_.data(); }
    const T* data() const noexcept { return values_.data(); }
    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }
    Buffer<T>& storage() noexcept { return values_; }
    const Buffer<T>& storage() const noexcept { return values_; }
    std::vector<T> to_vector() const { return {values_.begin(), values_.end()}; }

    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }

    T& at(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }
    const T& at(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }
    T& at(std::size_t i, std::size_t j, std::size_t k) { return values_[(i * shape_[1] + j) * shape_[2] + k]; }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }

    /// Same values under a new shape of equal element count.
    Tensor reshaped(Shape shape) const {
        if (shape_size(shape) != values_.size()) {
            throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        }
        return Tensor(std::move(shape), values_);
    }

    bool has_grad() const noexcept { return !grad_.empty(); }
    void ensure_grad() {
        if (grad_.size() != values_.size()) {
            grad_.assign(values_.size(), T(0));
        }
    }
    void zero_grad() { grad_.assign(values_.size(), T(0)); }
    void clear_grad() { grad_.clear(); }
    Buffer<T>& grad() noexcept { return grad_; }
    const Buffer<T>& grad() const noexcept { return grad_; }

    void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

    bool operator==(const Tensor& other) const { return shape_ == other.shape_ && values_ == other.values_; }

private:
    Shape shape_;
    Buffer<T> values_;
    Buffer<T> grad_;
};

/// Throws ShapeError unless `t` has exactly the expected shape.
template <typename T>
void expect_shape(const Tensor<T>& t, const Shape& expected, const char* what) {
    if (t.shape() != expected) {
        throw ShapeError(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                         shape_string(t.shape()));
    }
}

template <typename T>
void expect_rank(const Tensor<T>& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_string(t.shape()));
    }
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t) {
    Buffer<To> v(t.values().begin(), t.values().end());
    return Tensor<To>(t.shape(), std::move(v));
}

} // namespace phonocard::nn
