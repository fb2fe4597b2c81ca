// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "ual/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ual {

MaskSet MaskSet::sample(const Network& net, std::size_t t, std::uint64_t seed) {
    if (t < 2) throw std::invalid_argument("MaskSet: T must be at least 2");
    MaskSet set;
    set.seed = seed;
    std::mt19937_64 rng(seed);
    set.masks.reserve(t);
    for (std::size_t i = 0; i < t; ++i) set.masks.push_back(net.sample_mask(rng()));
    return set;
}

double model_uncertainty(const std::vector<Tensor>& grids) {
    if (grids.size() < 2)
        throw std::invalid_argument("model_uncertainty: need at least 2 mask draws, got " +
                                    std::to_string(grids.size()));
    const std::size_t n = grids[0].size();
    for (const auto& g : grids)
        if (g.size() != n)
            throw std::invalid_argument("model_uncertainty: grids have mismatched shapes");

    // Population variance per element (divisor T, no Bessel correction).
    // Values are shifted by the first draw before averaging so that
    // identical draws cancel exactly instead of leaving rounding dust.
    const double inv_t = 1.0 / static_cast<double>(grids.size());
    std::vector<double> mean(n, 0.0);
    for (const auto& g : grids)
        for (std::size_t i = 0; i < n; ++i) mean[i] += g[i] - grids[0][i];
    for (auto& m : mean) m *= inv_t;

    double acc = 0.0;
    for (const auto& g : grids)
        for (std::size_t i = 0; i < n; ++i) {
            const double d = (g[i] - grids[0][i]) - mean[i];
            acc += d * d;
        }
    return acc * inv_t / static_cast<double>(n);
}

std::vector<GaussianEmbedding> embed(const Network& net, const std::vector<LabeledSample>& samples,
                                     const MaskSet& masks) {
    if (masks.masks.size() < 2) throw std::invalid_argument("embed: mask set must have T >= 2");
    const std::size_t t_count = masks.masks.size();
    const std::size_t c = net.config().channels;

    std::vector<GaussianEmbedding> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        GaussianEmbedding e;
        e.sample_id = s.sample_id;
        e.identity = s.identity;
        e.camera = s.camera;
        e.mean.assign(c, 0.0);
        double sigma2_sum = 0.0;
        std::vector<Tensor> mu_grids;
        mu_grids.reserve(t_count);
        for (const auto& mask : masks.masks) {
            Tape tape;
            auto params = net.push_params(tape);
            auto f = net.forward(tape, params, Tensor({s.input.size()}, s.input), mask);
            const Tensor& mu = tape.value(f.mu);
            for (std::size_t j = 0; j < c; ++j) e.mean[j] += mu[j];
            sigma2_sum += tape.value(f.sigma2).item();
            mu_grids.push_back(tape.value(f.mu_grid));
        }
        for (auto& v : e.mean) v /= static_cast<double>(t_count);
        e.data_uncertainty = sigma2_sum / static_cast<double>(t_count);
        e.model_uncertainty = model_uncertainty(mu_grids);
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(),
              [](const GaussianEmbedding& a, const GaussianEmbedding& b) { return a.sample_id < b.sample_id; });
    return out;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw std::invalid_argument("cosine_similarity: zero-norm vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double similarity(const GaussianEmbedding& a, const GaussianEmbedding& b) {
    return cosine_similarity(a.mean, b.mean);
}

}  // namespace ual
