#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "camid/error.hpp"

namespace camid {

// Dense row-major tensor of doubles. Rank-3 tensors use channel-major
// (C, H, W) layout throughout.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s)
        : shape(std::move(s)), data(numel_of(shape), 0.0) {}
    Tensor(std::initializer_list<std::size_t> s)
        : shape(s), data(numel_of(shape), 0.0) {}

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (const auto d : s) n *= d;
        return n;
    }

    std::size_t numel() const { return data.size(); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // (c, y, x) accessor for rank-3 tensors.
    double& at3(std::size_t c, std::size_t y, std::size_t x) {
        return data[(c * shape[1] + y) * shape[2] + x];
    }
    double at3(std::size_t c, std::size_t y, std::size_t x) const {
        return data[(c * shape[1] + y) * shape[2] + x];
    }

    bool all_finite() const {
        for (const double v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

inline std::size_t numel_of(const std::vector<std::size_t>& shape) {
    return Tensor::numel_of(shape);
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeError(std::string("tensor shape mismatch in ") + what);
}

}  // namespace camid
