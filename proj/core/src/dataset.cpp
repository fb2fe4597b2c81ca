// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "ual/dataset.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace ual {

void DatasetSpec::validate() const {
    if (num_identities == 0 || samples_per_identity == 0 || d_in == 0 || num_cameras == 0)
        throw std::invalid_argument("DatasetSpec: all counts must be positive");
    if (cluster_spread <= 0.0 || inter_cluster_scale <= 0.0)
        throw std::invalid_argument("DatasetSpec: spreads must be positive");
    if (cluster_spread >= inter_cluster_scale)
        throw std::invalid_argument("DatasetSpec: cluster_spread must be below inter_cluster_scale");
}

std::vector<LabeledSample> generate(const DatasetSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    std::vector<LabeledSample> out;
    out.reserve(spec.num_identities * spec.samples_per_identity);
    std::int64_t next_id = 0;
    for (std::size_t id = 0; id < spec.num_identities; ++id) {
        std::vector<double> center(spec.d_in);
        for (auto& v : center) v = spec.center_offset + spec.inter_cluster_scale * unit(rng);
        for (std::size_t k = 0; k < spec.samples_per_identity; ++k) {
            LabeledSample s;
            s.sample_id = next_id++;
            s.identity = static_cast<int>(id);
            s.camera = static_cast<int>(k % spec.num_cameras);
            s.eta = 0.0;
            s.input.resize(spec.d_in);
            for (std::size_t j = 0; j < spec.d_in; ++j)
                s.input[j] = center[j] + spec.cluster_spread * unit(rng);
            out.push_back(std::move(s));
        }
    }
    return out;
}

LabeledSample corrupt(const LabeledSample& sample, double eta, std::uint64_t seed) {
    if (eta < 0.0) throw std::invalid_argument("corrupt: eta must be non-negative");
    LabeledSample out = sample;
    out.eta = eta;
    if (eta == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (auto& v : out.input) v += eta * unit(rng);
    return out;
}

QueryGallerySplit split_multi_query(const std::vector<LabeledSample>& samples, double fraction,
                                    const CorruptionPlan& plan, std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw std::invalid_argument("split_multi_query: fraction must be in (0,1)");
    if (plan.probability < 0.0 || plan.probability > 1.0)
        throw std::invalid_argument("split_multi_query: corruption probability must be in [0,1]");

    std::map<std::pair<int, int>, std::vector<LabeledSample>> groups;
    for (const auto& s : samples) groups[{s.identity, s.camera}].push_back(s);

    std::mt19937_64 rng(seed);
    QueryGallerySplit split;
    for (auto& [key, group] : groups) {
        if (group.size() < 2)
            throw std::invalid_argument("split_multi_query: group (identity=" +
                                        std::to_string(key.first) + ", camera=" +
                                        std::to_string(key.second) + ") has fewer than 2 samples");
        std::sort(group.begin(), group.end(),
                  [](const LabeledSample& a, const LabeledSample& b) { return a.sample_id < b.sample_id; });
        std::shuffle(group.begin(), group.end(), rng);
        const std::size_t n_query =
            static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(group.size())));
        std::vector<LabeledSample> q(group.begin(), group.begin() + n_query);
        std::vector<LabeledSample> g(group.begin() + n_query, group.end());
        auto by_id = [](const LabeledSample& a, const LabeledSample& b) { return a.sample_id < b.sample_id; };
        std::sort(q.begin(), q.end(), by_id);
        std::sort(g.begin(), g.end(), by_id);
        split.queries.insert(split.queries.end(), q.begin(), q.end());
        split.gallery.insert(split.gallery.end(), g.begin(), g.end());
    }

    std::mt19937_64 plan_rng(plan.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (auto& q : split.queries) {
        const double u = coin(plan_rng);
        const std::uint64_t sample_seed = plan_rng();
        if (u < plan.probability && plan.eta > 0.0) q = corrupt(q, plan.eta, sample_seed);
    }
    return split;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>
split_by_identity(const std::vector<LabeledSample>& samples) {
    int max_id = -1;
    for (const auto& s : samples) max_id = std::max(max_id, s.identity);
    const int cut = (max_id + 1) / 2;
    std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> out;
    for (const auto& s : samples)
        (s.identity < cut ? out.first : out.second).push_back(s);
    return out;
}

}  // namespace ual
