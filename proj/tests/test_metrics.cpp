// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ual/metrics.hpp"

using namespace ual;

namespace {

GaussianEmbedding emb(std::int64_t id, int identity, int camera, std::vector<double> mean,
                      double s2d = 1.0, double s2m = 1.0) {
    GaussianEmbedding e;
    e.sample_id = id;
    e.identity = identity;
    e.camera = camera;
    e.mean = std::move(mean);
    e.data_uncertainty = s2d;
    e.model_uncertainty = s2m;
    return e;
}

// Independent AP recomputation: walk the ranking and rebuild precision
// from scratch at every rank.
double ap_oracle(const std::vector<bool>& ranked) {
    double sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        if (!ranked[r]) continue;
        ++positives;
        std::size_t hits_above = 0;
        for (std::size_t j = 0; j <= r; ++j)
            if (ranked[j]) ++hits_above;
        sum += static_cast<double>(hits_above) / static_cast<double>(r + 1);
    }
    return sum / static_cast<double>(positives);
}

}  // namespace

TEST_CASE("hand-evaluated three-item average precision") {
    CHECK(average_precision({true, false, true}) == doctest::Approx(0.833333).epsilon(1e-5));
}

TEST_CASE("perfect and worst-case average precision") {
    CHECK(average_precision({true, true, false, false}) == 1.0);
    const std::size_t g = 6;
    std::vector<bool> worst(g, false);
    worst.back() = true;
    CHECK(average_precision(worst) == doctest::Approx(1.0 / g).epsilon(1e-12));
}

TEST_CASE("average precision matches the exhaustive oracle up to length 8") {
    for (std::size_t len = 1; len <= 8; ++len) {
        for (std::size_t bits = 1; bits < (std::size_t{1} << len); ++bits) {
            std::vector<bool> ranked(len);
            for (std::size_t i = 0; i < len; ++i) ranked[i] = (bits >> i) & 1;
            CHECK(average_precision(ranked) == ap_oracle(ranked));
        }
    }
}

TEST_CASE("average precision requires a positive") {
    CHECK_THROWS_AS(average_precision({false, false}), std::invalid_argument);
}

TEST_CASE("cmc basics") {
    CHECK(cmc({{true, false}, {true, false}}, 1) == 1.0);
    // one hit at rank 1, one at rank 3
    CHECK(cmc({{true, false, false}, {false, false, true}}, 1) == 0.5);
    CHECK(cmc({{false, true, false}, {false, false, true}}, 3) == 1.0);
    CHECK_THROWS_AS(cmc({{true}}, 0), std::invalid_argument);
    CHECK_THROWS_AS(cmc({}, 1), std::invalid_argument);
}

TEST_CASE("cmc is non-decreasing in k") {
    std::mt19937_64 rng(7);
    std::bernoulli_distribution coin(0.3);
    std::vector<std::vector<bool>> rankings(10, std::vector<bool>(8));
    for (auto& r : rankings) {
        bool any = false;
        for (std::size_t i = 0; i < r.size(); ++i) any = (r[i] = coin(rng)) || any;
        if (!any) r.back() = true;
    }
    double prev = 0.0;
    for (std::size_t k = 1; k <= 8; ++k) {
        const double v = cmc(rankings, k);
        CHECK(v >= prev);
        CHECK(v <= 1.0);
        prev = v;
    }
}

TEST_CASE("well separated queries score perfect retrieval") {
    // Gallery is a clone of the queries under a different camera.
    std::vector<GaussianEmbedding> queries, gallery;
    for (int id = 0; id < 3; ++id) {
        std::vector<double> axis(3, 0.0);
        axis[id] = 1.0;
        queries.push_back(emb(id, id, 0, axis));
        gallery.push_back(emb(100 + id, id, 1, axis));
    }
    // distractors of foreign identities
    gallery.push_back(emb(200, 7, 1, {0.5, 0.5, 0.5}));
    auto r = single_query_eval(queries, gallery);
    CHECK(r.mean_ap == 1.0);
    CHECK(r.rank1 == 1.0);
    CHECK(r.scored == 3);
    CHECK(r.skipped == 0);
}

TEST_CASE("same identity and camera gallery items are excluded") {
    // The only same-identity item shares the query's camera, so the
    // query has no valid positives and is skipped.
    std::vector<GaussianEmbedding> queries = {emb(1, 0, 0, {1.0, 0.0})};
    std::vector<GaussianEmbedding> gallery = {emb(2, 0, 0, {1.0, 0.0}),
                                              emb(3, 9, 1, {0.0, 1.0})};
    auto r = single_query_eval(queries, gallery);
    CHECK(r.scored == 0);
    CHECK(r.skipped == 1);
}

TEST_CASE("disjoint identities skip every query") {
    std::vector<GaussianEmbedding> queries = {emb(1, 0, 0, {1.0, 0.0}),
                                              emb(2, 1, 0, {0.0, 1.0})};
    std::vector<GaussianEmbedding> gallery = {emb(3, 5, 1, {1.0, 0.0})};
    auto r = single_query_eval(queries, gallery);
    CHECK(r.scored == 0);
    CHECK(r.skipped == 2);
    CHECK(r.mean_ap == 0.0);
}

TEST_CASE("similarity ties rank the smaller sample id first") {
    std::vector<GaussianEmbedding> queries = {emb(1, 0, 0, {1.0, 0.0})};
    // Positive and negative with identical similarity; the positive has
    // the smaller id, so rank-1 hits.
    std::vector<GaussianEmbedding> gallery = {emb(10, 0, 1, {1.0, 0.0}),
                                              emb(11, 9, 1, {1.0, 0.0})};
    CHECK(single_query_eval(queries, gallery).rank1 == 1.0);
    // Swap the ids: the negative now outranks the positive.
    gallery = {emb(11, 0, 1, {1.0, 0.0}), emb(10, 9, 1, {1.0, 0.0})};
    CHECK(single_query_eval(queries, gallery).rank1 == 0.0);
}

TEST_CASE("duplicating the gallery preserves rank-1") {
    std::mt19937_64 rng(13);
    std::vector<GaussianEmbedding> queries, gallery;
    std::int64_t next = 0;
    for (int id = 0; id < 4; ++id)
        for (int k = 0; k < 2; ++k) {
            auto mean = Tensor::randn({4}, rng).values();
            (k == 0 ? queries : gallery).push_back(emb(next++, id, k, mean));
        }
    const double base = single_query_eval(queries, gallery).rank1;

    std::vector<GaussianEmbedding> doubled = gallery;
    for (auto g : gallery) {
        g.sample_id += 1000;
        doubled.push_back(g);
    }
    CHECK(single_query_eval(queries, doubled).rank1 == base);
}

TEST_CASE("metrics ignore gallery input order") {
    std::mt19937_64 rng(17);
    std::vector<GaussianEmbedding> queries, gallery;
    std::int64_t next = 0;
    for (int id = 0; id < 5; ++id)
        for (int k = 0; k < 3; ++k) {
            auto mean = Tensor::randn({4}, rng).values();
            (k == 0 ? queries : gallery).push_back(emb(next++, id, k, mean));
        }
    auto a = single_query_eval(queries, gallery);
    std::reverse(gallery.begin(), gallery.end());
    auto b = single_query_eval(queries, gallery);
    CHECK(a.mean_ap == b.mean_ap);
    CHECK(a.rank1 == b.rank1);
}

TEST_CASE("risk sweep starts at the unfiltered score and retains monotonically") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    std::vector<GaussianEmbedding> queries, gallery;
    std::int64_t next = 0;
    for (int id = 0; id < 5; ++id)
        for (int k = 0; k < 3; ++k) {
            auto mean = Tensor::randn({4}, rng).values();
            auto e = emb(next++, id, k, mean, u(rng), u(rng));
            (k == 0 ? queries : gallery).push_back(e);
        }
    const std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
    auto rows = risk_sweep(queries, gallery, alphas);
    REQUIRE(rows.size() == alphas.size());
    CHECK(rows[0].retained == queries.size());
    CHECK(rows[0].mean_ap == single_query_eval(queries, gallery).mean_ap);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].retained <= rows[i - 1].retained);

    CHECK_THROWS_AS(risk_sweep(queries, gallery, {}), std::invalid_argument);
}

TEST_CASE("singleton groups make the reliability flag a no-op") {
    std::mt19937_64 rng(23);
    std::vector<GaussianEmbedding> queries, gallery;
    std::int64_t next = 0;
    for (int id = 0; id < 4; ++id) {
        queries.push_back(emb(next++, id, 0, Tensor::randn({4}, rng).values(), 0.1 + id, 0.2));
        gallery.push_back(emb(next++, id, 1, Tensor::randn({4}, rng).values()));
        gallery.push_back(emb(next++, id, 2, Tensor::randn({4}, rng).values()));
    }
    auto with = multi_query_eval(queries, gallery, true);
    auto without = multi_query_eval(queries, gallery, false);
    CHECK(with.mean_ap == without.mean_ap);
    CHECK(with.rank1 == without.rank1);
}

TEST_CASE("reliability weighting down-weights a corrupted group member") {
    // Identity 0's group has one clean query pointing at the right
    // direction and one high-uncertainty query pointing at identity 1.
    std::vector<GaussianEmbedding> queries = {
        emb(1, 0, 0, {1.0, 0.0}, 0.2, 0.2),
        emb(2, 0, 0, {-0.1, 1.0}, 5.0, 5.0),  // corrupted, high uncertainty
    };
    std::vector<GaussianEmbedding> gallery = {
        emb(10, 0, 1, {1.0, 0.0}),
        emb(11, 1, 1, {0.0, 1.0}),
    };
    std::vector<FusionGroupReport> report;
    auto with = multi_query_eval(queries, gallery, true, 0.5, 1.0, &report);
    auto without = multi_query_eval(queries, gallery, false);
    CHECK(with.mean_ap > without.mean_ap);
    REQUIRE(report.size() == 1);
    REQUIRE(report[0].weights.size() == 2);
    CHECK(report[0].weights[0] > report[0].weights[1]);
    CHECK(report[0].weights[0] + report[0].weights[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("empty gallery is rejected") {
    std::vector<GaussianEmbedding> queries = {emb(1, 0, 0, {1.0, 0.0})};
    CHECK_THROWS_AS(single_query_eval(queries, {}), std::invalid_argument);
    CHECK_THROWS_AS(multi_query_eval(queries, {}, false), std::invalid_argument);
}
