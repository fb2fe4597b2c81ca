// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstdint>
#include <vector>

#include "ual/tape.hpp"
#include "ual/tensor.hpp"

namespace ual {

/// Class posterior of a Gaussian embedding under the cosine classifier:
/// p_i = softmax(w_i^T mu / sigma2) with mu and the classifier rows
/// l2-normalized. Forward-only; used directly by tests and the
/// temperature-gap analysis.
std::vector<double> posterior(const std::vector<double>& mu, const Tensor& classifier,
                              double sigma2);

/// -log posterior(label) at temperature 1/sigma2, forward-only.
double posterior_nll(const std::vector<double>& mu, const Tensor& classifier, double sigma2,
                     std::size_t label);

struct DataLossResult {
    NodeId loss;      // ce_inner / sigma2 + log sigma2
    NodeId ce_inner;  // temperature-1 cross entropy on normalized vectors
};

/// Sampling-free data-uncertainty loss. `mu` is a (c) vector node,
/// `sigma2` a positive scalar node, `classifier` a (num_classes x c)
/// matrix node.
DataLossResult data_uncertainty_loss(Tape& tape, NodeId mu, NodeId sigma2, std::size_t label,
                                     NodeId classifier);

/// Temperature-1 cross entropy of `mu` against the cosine classifier,
/// via max-subtracted log-sum-exp.
NodeId cross_entropy(Tape& tape, NodeId mu, std::size_t label, NodeId classifier);

/// Batch-hard triplet loss on l2-normalized features with Euclidean
/// distance: per anchor, hardest positive minus hardest negative plus
/// margin, clamped at zero, averaged over anchors. Hard pairs are
/// selected from forward values; gradients flow through the selected
/// distances only.
NodeId triplet_loss(Tape& tape, const std::vector<NodeId>& features, const std::vector<int>& labels,
                    double margin);

/// Baseline loss with reparameterized sampling: z' = mu + eps (.) sigma,
/// cross entropy of z', plus lambda * max(0, floor - H) where H is the
/// differential entropy of N(mu, diag sigma2).
NodeId sampling_baseline_loss(Tape& tape, NodeId mu, NodeId sigma2_vec, std::size_t label,
                              NodeId classifier, double lambda, double entropy_floor,
                              std::uint64_t seed);

/// Differential entropy of N(mu, diag sigma2) with all variances equal
/// to `sigma2` in `dim` dimensions; used for the entropy-floor default.
double gaussian_entropy(std::size_t dim, double sigma2);

}  // namespace ual
