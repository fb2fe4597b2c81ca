// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstdint>
#include <vector>

#include "ual/dataset.hpp"
#include "ual/model.hpp"

namespace ual {

/// Final representation of one sample after Monte-Carlo aggregation.
struct GaussianEmbedding {
    std::int64_t sample_id = 0;
    int identity = 0;
    int camera = 0;
    std::vector<double> mean;        // mu_bar
    double data_uncertainty = 0.0;   // sigma2_d, mean of per-draw sigma2_t
    double model_uncertainty = 0.0;  // sigma2_m, feature variance over mask draws
};

/// T Bayesian-module masks sampled once and reused for every sample in
/// an evaluation run.
struct MaskSet {
    std::vector<Tensor> masks;
    std::uint64_t seed = 0;

    static MaskSet sample(const Network& net, std::size_t t, std::uint64_t seed);
};

/// Model uncertainty: element-wise population variance
/// (divide by T) of the grids around their element-wise mean, then the
/// mean over all elements. Requires T >= 2 grids of identical shape.
double model_uncertainty(const std::vector<Tensor>& grids);

/// Monte-Carlo embedding of a batch of samples with a fixed mask set.
/// Results are ordered by sample_id.
std::vector<GaussianEmbedding> embed(const Network& net, const std::vector<LabeledSample>& samples,
                                     const MaskSet& masks);

/// Cosine similarity of the mean vectors.
double similarity(const GaussianEmbedding& a, const GaussianEmbedding& b);
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace ual
