// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstdint>
#include <vector>

#include "ual/inference.hpp"

namespace ual {

struct GateThresholds {
    double gamma_d = 0.0;
    double gamma_m = 0.0;
    double alpha = 0.0;
};

struct GateEntry {
    std::int64_t sample_id = 0;
    double c_d = 0.0;  // 1 / sigma2_d
    double c_m = 0.0;  // 1 / sigma2_m (infinite model certainty clamps, see gate())
    bool kept = false;
};

struct GateResult {
    GateThresholds thresholds;
    std::vector<GateEntry> entries;  // query order preserved
    std::vector<std::int64_t> kept_ids;
};

/// Risk-controlled gating: per criterion c = 1/sigma2, the threshold
/// interpolates that criterion's own population extremes,
/// gamma = alpha * gamma_max + (1 - alpha) * gamma_min. A query is kept
/// iff both criteria are >= their thresholds (>= rather than strict >,
/// so alpha = 0 keeps the whole population).
GateResult gate(const std::vector<GaussianEmbedding>& queries, double alpha);

/// Same decision rule with caller-provided thresholds.
GateResult gate_with_thresholds(const std::vector<GaussianEmbedding>& queries,
                                const GateThresholds& thresholds);

struct ReliabilityWeights {
    std::vector<double> d;  // projected data-uncertainty values
    std::vector<double> m;  // projected model-uncertainty values
    std::vector<double> w;  // normalized reliability scores, sum to 1
};

/// Min-max projection of each uncertainty list into [tau_min, tau_max]
/// (low uncertainty -> tau_max) followed by w_i = m_i d_i / sum m_j d_j.
/// A constant list projects to tau_max everywhere, giving uniform
/// weights.
ReliabilityWeights multi_query_weights(const std::vector<double>& data_unc,
                                       const std::vector<double>& model_unc, double tau_min,
                                       double tau_max);

/// s_g = sum_i w_i * sims[i][g].
std::vector<double> fuse_similarities(const std::vector<double>& weights,
                                      const std::vector<std::vector<double>>& per_query_sims);

}  // namespace ual
