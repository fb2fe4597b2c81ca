// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ual {

/// Dense float64 array with an explicit shape. Values are stored
/// row-major; a rank-0 tensor is not allowed, scalars have shape {1}.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), values_(count(shape_), 0.0) {
        validate_shape();
    }

    Tensor(std::vector<std::size_t> shape, std::vector<double> values)
        : shape_(std::move(shape)), values_(std::move(values)) {
        validate_shape();
        if (values_.size() != count(shape_))
            throw std::invalid_argument("Tensor: value count " + std::to_string(values_.size()) +
                                        " does not match shape (" + shape_string() + ")");
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor filled(std::vector<std::size_t> shape, double v) {
        Tensor t(std::move(shape));
        for (auto& x : t.values_) x = v;
        return t;
    }

    static Tensor randn(std::vector<std::size_t> shape, std::mt19937_64& rng, double stddev = 1.0) {
        Tensor t(std::move(shape));
        std::normal_distribution<double> dist(0.0, stddev);
        for (auto& x : t.values_) x = dist(rng);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Value of a one-element tensor.
    double item() const {
        if (values_.size() != 1)
            throw std::invalid_argument("Tensor::item: tensor has " +
                                        std::to_string(values_.size()) + " elements");
        return values_[0];
    }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::string shape_string() const {
        std::string s;
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s;
    }

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

    void validate_shape() const {
        if (shape_.empty())
            throw std::invalid_argument("Tensor: empty shape");
        for (std::size_t d : shape_)
            if (d == 0) throw std::invalid_argument("Tensor: zero-sized dimension");
    }

    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

}  // namespace ual
