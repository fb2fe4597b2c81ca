// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstdint>
#include <vector>

#include "ual/inference.hpp"
#include "ual/reliability.hpp"

namespace ual {

/// Average precision of one ranked gallery: mean over positives of the
/// precision at each positive's rank. Requires at least one positive.
double average_precision(const std::vector<bool>& ranked_positives);

/// Fraction of queries whose top-k ranking contains a positive.
double cmc(const std::vector<std::vector<bool>>& rankings, std::size_t k);

struct EvalResult {
    double mean_ap = 0.0;
    double rank1 = 0.0;
    std::size_t scored = 0;
    std::size_t skipped = 0;  // queries with no valid positives after exclusion
};

/// Standard single-query protocol: gallery items sharing both identity
/// and camera with the query are excluded; remaining same-identity
/// items are positives. Similarity ties are broken by ascending
/// gallery sample_id.
EvalResult single_query_eval(const std::vector<GaussianEmbedding>& queries,
                             const std::vector<GaussianEmbedding>& gallery);

struct SweepRow {
    double alpha = 0.0;
    std::size_t retained = 0;
    double mean_ap = 0.0;  // over retained queries; 0 when none retained
};

/// For each alpha: gate the queries, then score the kept ones with
/// single_query_eval.
std::vector<SweepRow> risk_sweep(const std::vector<GaussianEmbedding>& queries,
                                 const std::vector<GaussianEmbedding>& gallery,
                                 const std::vector<double>& alphas);

struct FusionGroupReport {
    int identity = 0;
    int camera = 0;
    std::vector<double> weights;
};

/// Multi-query protocol: queries grouped by (identity, camera), each
/// group fused into one similarity vector (reliability weights when the
/// flag is set, uniform otherwise) and scored as a single query.
EvalResult multi_query_eval(const std::vector<GaussianEmbedding>& queries,
                            const std::vector<GaussianEmbedding>& gallery, bool use_reliability,
                            double tau_min = 0.5, double tau_max = 1.0,
                            std::vector<FusionGroupReport>* report = nullptr);

}  // namespace ual
