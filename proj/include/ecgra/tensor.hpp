#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "ecgra/error.hpp"

namespace ecgra {

// Dense row-major tensor. Rank is dynamic but the codebase only uses rank 1
// (bias vectors), rank 2 (batch x features) and rank 3 (batch x channels x
// time).
template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), T{0});
    }
    Tensor(std::initializer_list<std::size_t> s) : Tensor(std::vector<std::size_t>(s)) {}

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1},
                               [](std::size_t a, std::size_t b) { return a * b; });
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    T& operator()(std::size_t i) { return data[i]; }
    const T& operator()(std::size_t i) const { return data[i]; }
    T& operator()(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    T& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    Tensor<T> like_zeros() const { return Tensor<T>(shape); }

    bool same_shape(const Tensor<T>& other) const { return shape == other.shape; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    std::string shape_string() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }
};

} // namespace ecgra
