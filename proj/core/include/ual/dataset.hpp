// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <cstdint>
#include <vector>

#include "ual/tensor.hpp"

namespace ual {

/// One synthetic observation standing in for a person image.
struct LabeledSample {
    std::int64_t sample_id = 0;
    int identity = 0;
    int camera = 0;
    double eta = 0.0;  // corruption strength actually applied; 0 for clean
    std::vector<double> input;
};

struct DatasetSpec {
    std::size_t num_identities = 100;
    std::size_t samples_per_identity = 12;
    std::size_t d_in = 32;
    double cluster_spread = 0.5;
    double inter_cluster_scale = 4.0;
    /// Constant added to every coordinate of every identity center.
    /// Zero for in-distribution data; nonzero shifts the whole domain.
    double center_offset = 0.0;
    std::size_t num_cameras = 4;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Identity clusters: one center per identity drawn from
/// N(offset, inter_cluster_scale^2 I), samples around it with standard
/// deviation cluster_spread, cameras assigned round-robin. Pure
/// function of the spec.
std::vector<LabeledSample> generate(const DatasetSpec& spec);

/// x <- x + eta * epsilon with epsilon ~ N(0, I). Identity, camera and
/// sample_id are preserved; the eta field records the applied strength.
LabeledSample corrupt(const LabeledSample& sample, double eta, std::uint64_t seed);

/// Independent per-query corruption: each query is corrupted with the
/// given probability at the given strength.
struct CorruptionPlan {
    double probability = 0.5;
    double eta = 2.0;
    std::uint64_t seed = 1;
};

struct QueryGallerySplit {
    std::vector<LabeledSample> queries;  // ordered by (identity, camera, sample_id)
    std::vector<LabeledSample> gallery;
};

/// Per (identity, camera) group: ceil(fraction * n) samples become
/// queries, the rest gallery; the corruption plan is then applied to
/// each query independently. Every group must have at least 2 samples.
QueryGallerySplit split_multi_query(const std::vector<LabeledSample>& samples, double fraction,
                                    const CorruptionPlan& plan, std::uint64_t seed);

/// Identity-disjoint partition: identities [0, n/2) -> first,
/// [n/2, n) -> second.
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>
split_by_identity(const std::vector<LabeledSample>& samples);

}  // namespace ual
