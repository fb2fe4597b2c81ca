// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "ual/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ual {

void ModelConfig::validate() const {
    if (d_in == 0 || hidden == 0 || grid_h == 0 || grid_w == 0 || channels == 0 || num_classes == 0)
        throw std::invalid_argument("ModelConfig: all dimensions must be positive");
    if (rho <= 0.0 || rho > 1.0)
        throw std::invalid_argument("ModelConfig: rho must be in (0,1]");
}

Tensor bernoulli_mask(std::size_t rows, std::size_t cols, double rho, std::uint64_t seed) {
    if (rho <= 0.0 || rho > 1.0)
        throw std::invalid_argument("bernoulli_mask: rho must be in (0,1]");
    Tensor mask({rows, cols});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (auto& v : mask.values()) v = coin(rng) < rho ? 1.0 : 0.0;
    return mask;
}

void Network::add_param(std::string name, Tensor t) {
    names_.push_back(std::move(name));
    params_.push_back(std::move(t));
}

Network Network::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Network net;
    net.config_ = config;
    std::mt19937_64 rng(seed);
    const std::size_t pos = config.grid_positions();
    const std::size_t c = config.channels;
    auto affine_w = [&](std::size_t in, std::size_t out) {
        return Tensor::randn({in, out}, rng, 1.0 / std::sqrt(static_cast<double>(in)));
    };
    // The first layer starts deliberately small (std 0.5/d_in rather than
    // 1/sqrt(d_in)) so that pre-activations of typical inputs sit inside
    // tanh's linear range. That keeps input-magnitude information alive in
    // the features the uncertainty heads read; with saturating gains the
    // variance heads go blind to sample quality. The second layer is scaled
    // up to compensate so downstream activations stay O(1).
    net.add_param("backbone.w1", Tensor::randn({config.d_in, config.hidden}, rng,
                                               0.5 / static_cast<double>(config.d_in)));
    net.add_param("backbone.b1", Tensor({config.hidden}));
    net.add_param("backbone.w2", Tensor::randn({config.hidden, pos * c}, rng,
                                               2.0 / std::sqrt(static_cast<double>(config.hidden))));
    net.add_param("backbone.b2", Tensor({pos * c}));
    net.add_param("bayes.w", affine_w(c, c));
    net.add_param("bayes.b", Tensor({c}));
    net.add_param("head_mu.w", affine_w(c, c));
    net.add_param("head_mu.b", Tensor({c}));
    // The variance head starts with identical rows, i.e. one shared linear
    // functional per grid position. Quality pooling divides the mean grid
    // element-wise by this head's output, so an initialization with
    // independent per-channel readouts would inject per-channel noise into
    // every pooled feature; a shared functional makes the division a
    // near-uniform rescaling until training differentiates the channels.
    // The gain (6/sqrt(c)) keeps the functional responsive to feature
    // magnitude and the positive bias keeps softplus away from its flat
    // tail, where tiny variances would explode the quality division.
    {
        Tensor sigma_w({c, c});
        Tensor row = Tensor::randn({c}, rng, 6.0 / std::sqrt(static_cast<double>(c)));
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < c; ++j) sigma_w.values()[i * c + j] = row[i];
        net.add_param("head_sigma.w", sigma_w);
    }
    {
        Tensor sigma_b({c});
        for (auto& v : sigma_b.values()) v = 2.0;
        net.add_param("head_sigma.b", sigma_b);
    }
    net.add_param("classifier.w",
                  Tensor::randn({config.num_classes, c}, rng, 1.0 / std::sqrt(static_cast<double>(c))));
    return net;
}

const Tensor& Network::param(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return params_[i];
    throw std::invalid_argument("Network: unknown parameter " + name);
}

Tensor& Network::param(const std::string& name) {
    return const_cast<Tensor&>(static_cast<const Network*>(this)->param(name));
}

void Network::set_class_identities(std::vector<int> ids) {
    if (ids.size() != config_.num_classes)
        throw std::invalid_argument("Network: class identity count does not match num_classes");
    class_identities_ = std::move(ids);
}

std::size_t Network::class_index(int identity) const {
    auto it = std::find(class_identities_.begin(), class_identities_.end(), identity);
    if (it == class_identities_.end())
        throw std::invalid_argument("Network: identity " + std::to_string(identity) +
                                    " is not covered by the classifier");
    return static_cast<std::size_t>(it - class_identities_.begin());
}

Tensor Network::sample_mask(std::uint64_t seed) const {
    return bernoulli_mask(config_.channels, config_.channels, config_.rho, seed);
}

std::vector<NodeId> Network::push_params(Tape& tape) const {
    std::vector<NodeId> ids;
    ids.reserve(params_.size());
    for (const auto& p : params_) ids.push_back(tape.parameter(p));
    return ids;
}

Network::ForwardResult Network::forward(Tape& tape, const std::vector<NodeId>& params,
                                        const Tensor& input, const Tensor& mask) const {
    if (input.size() != config_.d_in)
        throw std::invalid_argument("Network::forward: input has " + std::to_string(input.size()) +
                                    " values, expected " + std::to_string(config_.d_in));
    if (mask.shape() != std::vector<std::size_t>{config_.channels, config_.channels})
        throw std::invalid_argument("Network::forward: mask shape (" + mask.shape_string() +
                                    ") does not match the Bayesian module");

    enum { W1, B1, W2, B2, BW, BB, MW, MB, SW, SB, CLS };
    const std::size_t pos = config_.grid_positions();
    const std::size_t c = config_.channels;

    NodeId x = tape.constant(Tensor({1, config_.d_in}, input.values()));
    NodeId h = tape.tanh(tape.add_rowvec(tape.matmul(x, params[W1]), params[B1]));
    NodeId flat = tape.add_rowvec(tape.matmul(h, params[W2]), params[B2]);
    NodeId grid = tape.reshape(flat, {pos, c});  // feature grid F, one row per position

    NodeId mask_node = tape.constant(mask);
    NodeId theta = tape.mul(params[BW], mask_node);  // masked weights, bias left unmasked
    NodeId ft = tape.add_rowvec(tape.matmul(grid, theta), params[BB]);

    NodeId mu_grid = tape.add_rowvec(tape.matmul(ft, params[MW]), params[MB]);
    NodeId s_grid = tape.add_rowvec(tape.matmul(ft, params[SW]), params[SB]);
    NodeId sigma2_grid = tape.softplus(s_grid);

    ForwardResult r;
    r.mu_grid = mu_grid;
    r.sigma2_grid = sigma2_grid;
    r.mu = tape.mean_rows(tape.div(mu_grid, sigma2_grid));  // quality-aware pooling
    r.sigma2 = tape.mean_all(sigma2_grid);
    return r;
}

}  // namespace ual
