// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "ual/reliability.hpp"

#include <algorithm>
#include <stdexcept>

namespace ual {

namespace {

// A deterministic network has sigma2_m exactly 0; clamp so the
// reciprocal criterion stays finite.
constexpr double kMinUncertainty = 1e-300;

double reciprocal_criterion(double sigma2) {
    return 1.0 / std::max(sigma2, kMinUncertainty);
}

GateResult apply_gate(const std::vector<GaussianEmbedding>& queries, const GateThresholds& thr) {
    GateResult r;
    r.thresholds = thr;
    for (const auto& q : queries) {
        GateEntry e;
        e.sample_id = q.sample_id;
        e.c_d = reciprocal_criterion(q.data_uncertainty);
        e.c_m = reciprocal_criterion(q.model_uncertainty);
        e.kept = e.c_d >= thr.gamma_d && e.c_m >= thr.gamma_m;
        if (e.kept) r.kept_ids.push_back(e.sample_id);
        r.entries.push_back(e);
    }
    return r;
}

}  // namespace

GateResult gate(const std::vector<GaussianEmbedding>& queries, double alpha) {
    if (queries.empty()) throw std::invalid_argument("gate: empty query list");
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("gate: alpha must be in [0,1]");

    double d_min = 0, d_max = 0, m_min = 0, m_max = 0;
    bool first = true;
    for (const auto& q : queries) {
        const double cd = reciprocal_criterion(q.data_uncertainty);
        const double cm = reciprocal_criterion(q.model_uncertainty);
        if (first) {
            d_min = d_max = cd;
            m_min = m_max = cm;
            first = false;
        } else {
            d_min = std::min(d_min, cd);
            d_max = std::max(d_max, cd);
            m_min = std::min(m_min, cm);
            m_max = std::max(m_max, cm);
        }
    }
    GateThresholds thr;
    thr.alpha = alpha;
    thr.gamma_d = alpha * d_max + (1.0 - alpha) * d_min;
    thr.gamma_m = alpha * m_max + (1.0 - alpha) * m_min;
    return apply_gate(queries, thr);
}

GateResult gate_with_thresholds(const std::vector<GaussianEmbedding>& queries,
                                const GateThresholds& thresholds) {
    if (queries.empty()) throw std::invalid_argument("gate: empty query list");
    return apply_gate(queries, thresholds);
}

ReliabilityWeights multi_query_weights(const std::vector<double>& data_unc,
                                       const std::vector<double>& model_unc, double tau_min,
                                       double tau_max) {
    if (data_unc.empty() || data_unc.size() != model_unc.size())
        throw std::invalid_argument("multi_query_weights: uncertainty lists must be non-empty and equal-sized");
    if (tau_min <= 0.0 || tau_max <= 0.0 || tau_min > tau_max)
        throw std::invalid_argument("multi_query_weights: need 0 < tau_min <= tau_max");

    auto project = [&](const std::vector<double>& u) {
        const auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
        const double lo = *lo_it, hi = *hi_it;
        std::vector<double> out(u.size());
        if (hi == lo) {
            // Degenerate projection: no information to discriminate.
            std::fill(out.begin(), out.end(), tau_max);
        } else {
            for (std::size_t i = 0; i < u.size(); ++i) {
                const double beta = (u[i] - lo) / (hi - lo);
                out[i] = beta * tau_min + (1.0 - beta) * tau_max;
            }
        }
        return out;
    };

    ReliabilityWeights r;
    r.d = project(data_unc);
    r.m = project(model_unc);
    r.w.resize(r.d.size());
    double z = 0.0;
    for (std::size_t i = 0; i < r.d.size(); ++i) {
        r.w[i] = r.m[i] * r.d[i];
        z += r.w[i];
    }
    for (auto& w : r.w) w /= z;
    return r;
}

std::vector<double> fuse_similarities(const std::vector<double>& weights,
                                      const std::vector<std::vector<double>>& per_query_sims) {
    if (weights.size() != per_query_sims.size())
        throw std::invalid_argument("fuse_similarities: weight count " + std::to_string(weights.size()) +
                                    " does not match row count " + std::to_string(per_query_sims.size()));
    if (per_query_sims.empty()) throw std::invalid_argument("fuse_similarities: no rows");
    const std::size_t g = per_query_sims[0].size();
    for (const auto& row : per_query_sims)
        if (row.size() != g)
            throw std::invalid_argument("fuse_similarities: ragged similarity matrix");
    std::vector<double> fused(g, 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i)
        for (std::size_t j = 0; j < g; ++j) fused[j] += weights[i] * per_query_sims[i][j];
    return fused;
}

}  // namespace ual
