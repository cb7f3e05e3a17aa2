#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "noisegen/errors.hpp"

namespace ng {

// Dense rank-4 extents, (batch, channel, height, width).
struct Shape {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::int64_t size() const {
        return static_cast<std::int64_t>(n) * c * h * w;
    }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

// Row-major rank-4 tensor. Production code uses float storage; the
// finite-difference oracle instantiates the same ops with double.
template <typename T>
struct Tensor {
    Shape shape{};
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(Shape s, T fill = T(0))
        : shape(s), data(static_cast<std::size_t>(s.size()), fill) {
        if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
            throw ShapeError("tensor extents must be non-negative, got " + s.str());
        }
    }

    Tensor(Shape s, std::vector<T> d) : shape(s), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != shape.size()) {
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape.str());
        }
    }

    std::int64_t size() const { return shape.size(); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    std::int64_t index(int n, int c, int h, int w) const {
        return ((static_cast<std::int64_t>(n) * shape.c + c) * shape.h + h) * shape.w + w;
    }
    T& at(int n, int c, int h, int w) { return data[index(n, c, h, w)]; }
    const T& at(int n, int c, int h, int w) const { return data[index(n, c, h, w)]; }

    bool all_finite() const {
        for (T v : data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape);
        for (std::size_t i = 0; i < data.size(); ++i) {
            out.data[i] = static_cast<U>(data[i]);
        }
        return out;
    }

    static Tensor zeros(Shape s) { return Tensor(s, T(0)); }
    static Tensor full(Shape s, T v) { return Tensor(s, v); }

    // Vectors are carried as (len,1,1,1) tensors.
    static Tensor from_vector(const std::vector<T>& v) {
        return Tensor(Shape{static_cast<int>(v.size()), 1, 1, 1}, v);
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <typename T>
inline void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!(a.shape == b.shape)) {
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape.str() +
                         " vs " + b.shape.str());
    }
}

}  // namespace ng
