// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "ual/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ual {

namespace {

struct Candidate {
    std::int64_t sample_id;
    double sim;
    bool positive;
};

// Descending similarity, ties broken by ascending sample_id.
void rank(std::vector<Candidate>& c) {
    std::sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.sample_id < b.sample_id;
    });
}

// Scores one ranked candidate list into an eval accumulator.
struct Accumulator {
    double ap_sum = 0.0;
    std::size_t rank1_hits = 0;
    std::size_t scored = 0;
    std::size_t skipped = 0;

    void add(const std::vector<Candidate>& ranked) {
        std::vector<bool> pos(ranked.size());
        bool any = false;
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            pos[i] = ranked[i].positive;
            any = any || pos[i];
        }
        if (!any) {
            ++skipped;
            return;
        }
        ap_sum += average_precision(pos);
        if (pos[0]) ++rank1_hits;
        ++scored;
    }

    EvalResult result() const {
        EvalResult r;
        r.scored = scored;
        r.skipped = skipped;
        if (scored > 0) {
            r.mean_ap = ap_sum / static_cast<double>(scored);
            r.rank1 = static_cast<double>(rank1_hits) / static_cast<double>(scored);
        }
        return r;
    }
};

}  // namespace

double average_precision(const std::vector<bool>& ranked_positives) {
    std::size_t hits = 0;
    double ap = 0.0;
    for (std::size_t i = 0; i < ranked_positives.size(); ++i) {
        if (ranked_positives[i]) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    if (hits == 0) throw std::invalid_argument("average_precision: ranking has no positives");
    return ap / static_cast<double>(hits);
}

double cmc(const std::vector<std::vector<bool>>& rankings, std::size_t k) {
    if (k < 1) throw std::invalid_argument("cmc: k must be at least 1");
    if (rankings.empty()) throw std::invalid_argument("cmc: no rankings");
    std::size_t hits = 0;
    for (const auto& r : rankings) {
        const std::size_t depth = std::min(k, r.size());
        for (std::size_t i = 0; i < depth; ++i)
            if (r[i]) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

EvalResult single_query_eval(const std::vector<GaussianEmbedding>& queries,
                             const std::vector<GaussianEmbedding>& gallery) {
    if (gallery.empty()) throw std::invalid_argument("single_query_eval: empty gallery");
    Accumulator acc;
    for (const auto& q : queries) {
        std::vector<Candidate> cands;
        cands.reserve(gallery.size());
        for (const auto& g : gallery) {
            if (g.identity == q.identity && g.camera == q.camera) continue;
            cands.push_back({g.sample_id, similarity(q, g), g.identity == q.identity});
        }
        if (cands.empty()) {
            ++acc.skipped;
            continue;
        }
        rank(cands);
        acc.add(cands);
    }
    return acc.result();
}

std::vector<SweepRow> risk_sweep(const std::vector<GaussianEmbedding>& queries,
                                 const std::vector<GaussianEmbedding>& gallery,
                                 const std::vector<double>& alphas) {
    if (alphas.empty()) throw std::invalid_argument("risk_sweep: empty alpha grid");
    std::vector<SweepRow> rows;
    for (double alpha : alphas) {
        GateResult g = gate(queries, alpha);
        std::vector<GaussianEmbedding> kept;
        for (const auto& q : queries)
            if (std::find(g.kept_ids.begin(), g.kept_ids.end(), q.sample_id) != g.kept_ids.end())
                kept.push_back(q);
        SweepRow row;
        row.alpha = alpha;
        row.retained = kept.size();
        row.mean_ap = kept.empty() ? 0.0 : single_query_eval(kept, gallery).mean_ap;
        rows.push_back(row);
    }
    return rows;
}

EvalResult multi_query_eval(const std::vector<GaussianEmbedding>& queries,
                            const std::vector<GaussianEmbedding>& gallery, bool use_reliability,
                            double tau_min, double tau_max,
                            std::vector<FusionGroupReport>* report) {
    if (gallery.empty()) throw std::invalid_argument("multi_query_eval: empty gallery");
    std::map<std::pair<int, int>, std::vector<const GaussianEmbedding*>> groups;
    for (const auto& q : queries) groups[{q.identity, q.camera}].push_back(&q);

    Accumulator acc;
    for (const auto& [key, members] : groups) {
        const auto [identity, camera] = key;
        const std::size_t n = members.size();

        std::vector<double> weights(n, 1.0 / static_cast<double>(n));
        if (use_reliability) {
            std::vector<double> du(n), mu(n);
            for (std::size_t i = 0; i < n; ++i) {
                du[i] = members[i]->data_uncertainty;
                mu[i] = members[i]->model_uncertainty;
            }
            weights = multi_query_weights(du, mu, tau_min, tau_max).w;
        }
        if (report) report->push_back({identity, camera, weights});

        std::vector<std::size_t> kept_gallery;
        for (std::size_t j = 0; j < gallery.size(); ++j)
            if (!(gallery[j].identity == identity && gallery[j].camera == camera))
                kept_gallery.push_back(j);
        if (kept_gallery.empty()) {
            ++acc.skipped;
            continue;
        }

        std::vector<std::vector<double>> sims(n, std::vector<double>(kept_gallery.size()));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < kept_gallery.size(); ++j)
                sims[i][j] = similarity(*members[i], gallery[kept_gallery[j]]);
        const auto fused = fuse_similarities(weights, sims);

        std::vector<Candidate> cands(kept_gallery.size());
        for (std::size_t j = 0; j < kept_gallery.size(); ++j) {
            const auto& g = gallery[kept_gallery[j]];
            cands[j] = {g.sample_id, fused[j], g.identity == identity};
        }
        rank(cands);
        acc.add(cands);
    }
    return acc.result();
}

}  // namespace ual
