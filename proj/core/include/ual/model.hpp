// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ual/tape.hpp"
#include "ual/tensor.hpp"

namespace ual {

struct ModelConfig {
    std::size_t d_in = 32;
    std::size_t hidden = 64;
    std::size_t grid_h = 2;
    std::size_t grid_w = 2;
    std::size_t channels = 16;
    std::size_t num_classes = 50;
    double rho = 0.7;  // Bernoulli keep-probability of the Bayesian module

    std::size_t grid_positions() const { return grid_h * grid_w; }
    void validate() const;
};

/// Bernoulli(rho) 0/1 matrix, deterministic in the seed.
Tensor bernoulli_mask(std::size_t rows, std::size_t cols, double rho, std::uint64_t seed);

/// The unified network: MLP backbone producing a feature grid, a
/// Bernoulli-masked affine module applied position-wise, two affine
/// heads for the embedding grid and the raw uncertainty grid, and
/// quality-aware pooling. Also owns the cosine classifier used by the
/// training losses.
///
/// Parameter list (fixed order, used by checkpoints and the optimizer):
///   backbone.w1 (d_in x hidden), backbone.b1 (hidden)
///   backbone.w2 (hidden x h*w*c), backbone.b2 (h*w*c)
///   bayes.w (c x c), bayes.b (c)        -- only bayes.w is masked
///   head_mu.w (c x c), head_mu.b (c)
///   head_sigma.w (c x c), head_sigma.b (c)
///   classifier.w (num_classes x c)
class Network {
public:
    static Network init(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }

    std::size_t param_count() const { return params_.size(); }
    const std::string& param_name(std::size_t i) const { return names_[i]; }
    const Tensor& param(std::size_t i) const { return params_[i]; }
    Tensor& param(std::size_t i) { return params_[i]; }
    const Tensor& param(const std::string& name) const;
    Tensor& param(const std::string& name);

    /// Identity labels covered by the classifier, row index = class index.
    const std::vector<int>& class_identities() const { return class_identities_; }
    void set_class_identities(std::vector<int> ids);
    /// Classifier row for an identity; throws if the identity is unknown.
    std::size_t class_index(int identity) const;

    /// Fresh c x c mask for the Bayesian module.
    Tensor sample_mask(std::uint64_t seed) const;

    /// All parameters registered on a tape, aligned with the parameter list.
    std::vector<NodeId> push_params(Tape& tape) const;

    struct ForwardResult {
        NodeId mu;           // pooled feature, (c)
        NodeId sigma2;       // scalar data uncertainty, mean of the grid
        NodeId mu_grid;      // pre-pooling embedding grid, (h*w x c)
        NodeId sigma2_grid;  // softplus-mapped uncertainty grid, (h*w x c)
    };

    /// One pass with a fixed mask. `params` must come from push_params
    /// on the same tape.
    ForwardResult forward(Tape& tape, const std::vector<NodeId>& params, const Tensor& input,
                          const Tensor& mask) const;

    NodeId classifier_node(const std::vector<NodeId>& params) const { return params.back(); }

private:
    ModelConfig config_;
    std::vector<std::string> names_;
    std::vector<Tensor> params_;
    std::vector<int> class_identities_;

    void add_param(std::string name, Tensor t);
};

}  // namespace ual
