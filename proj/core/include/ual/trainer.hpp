// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ual/dataset.hpp"
#include "ual/model.hpp"

namespace ual {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t iterations_per_epoch = 50;
    std::size_t batch_p = 8;  // identities per batch
    std::size_t batch_k = 4;  // samples per identity
    double learning_rate = 3.5e-4;
    std::vector<std::size_t> decay_epochs = {15, 25};  // lr *= decay_factor at each
    double decay_factor = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 1e-4;
    std::uint64_t seed = 1;
    double rho = 0.7;
    double triplet_margin = 0.3;
    /// On-the-fly quality variation: each batch sample is corrupted
    /// with this probability at a strength drawn from corrupt_etas,
    /// with fresh noise every draw so realizations cannot be memorized.
    /// Off by default: corruption is primarily a test-time probe, and
    /// training on it teaches the backbone to suppress exactly the
    /// quality signal the uncertainty heads are meant to report.
    double corrupt_prob = 0.0;
    std::vector<double> corrupt_etas = {0.5, 1.0, 2.0, 4.0};
    std::string loss = "ual";  // "ual" (data-uncertainty) or "dnet" (sampling baseline)
    double dnet_lambda = 0.01;
    double dnet_entropy_sigma2 = 0.5;  // per-dimension variance defining the entropy floor
    std::size_t hidden = 64;
    std::size_t grid_h = 2;
    std::size_t grid_w = 2;
    std::size_t channels = 16;

    void validate() const;
    /// Learning rate in effect during the given 0-based epoch.
    double lr_at_epoch(std::size_t epoch) const;
};

/// Element-wise Adam over a flat parameter list.
class AdamOptimizer {
public:
    AdamOptimizer(double lr, double beta1, double beta2, double eps, double weight_decay);

    void set_learning_rate(double lr) { lr_ = lr; }
    double learning_rate() const { return lr_; }

    /// One update: params[i] gets gradient grads[i] plus L2 decay.
    void step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads);

private:
    double lr_, beta1_, beta2_, eps_, weight_decay_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// P identities without replacement, K samples each (with replacement
/// when an identity has fewer than K). Deterministic in the seed.
std::vector<LabeledSample> pk_sample(const std::vector<LabeledSample>& dataset, std::size_t p,
                                     std::size_t k, std::uint64_t seed);

struct HistoryRow {
    std::size_t iteration = 0;
    double total = 0.0;
    double data_term = 0.0;
    double triplet_term = 0.0;
};

struct TrainOutput {
    Network net;
    std::vector<HistoryRow> history;
};

/// Raised when the loss goes non-finite; carries the last finite state.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t iteration, Network last_good)
        : std::runtime_error("training diverged at iteration " + std::to_string(iteration)),
          iteration(iteration),
          last_good(std::move(last_good)) {}

    std::size_t iteration;
    Network last_good;
};

TrainOutput train(const std::vector<LabeledSample>& dataset, const TrainConfig& config);

/// Fine-tunes a clone of the network on one sample with the
/// data-uncertainty loss alone for the given number of iterations and
/// returns the mean absolute parameter change. The input network is
/// untouched. The sample's identity must be covered by the classifier.
double model_change_probe(const Network& net, const LabeledSample& sample, std::size_t iterations,
                          double learning_rate, std::uint64_t seed,
                          const TrainConfig& config = TrainConfig{});

}  // namespace ual
