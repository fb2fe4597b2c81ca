// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include <doctest.h>

#include <cmath>

#include "ual/dataset.hpp"
#include "ual/inference.hpp"

using namespace ual;

namespace {

ModelConfig small_config(double rho = 0.7) {
    ModelConfig c;
    c.d_in = 5;
    c.hidden = 6;
    c.grid_h = 2;
    c.grid_w = 2;
    c.channels = 3;
    c.num_classes = 4;
    c.rho = rho;
    return c;
}

std::vector<LabeledSample> some_samples(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<LabeledSample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].sample_id = static_cast<std::int64_t>(n - i);  // deliberately unsorted
        out[i].identity = static_cast<int>(i % 2);
        out[i].camera = static_cast<int>(i % 3);
        out[i].input = Tensor::randn({5}, rng).values();
    }
    return out;
}

}  // namespace

TEST_CASE("identical grids have zero model uncertainty") {
    Tensor g({2, 2}, {1.0, -2.0, 0.5, 3.0});
    CHECK(model_uncertainty({g, g, g}) == 0.0);
}

TEST_CASE("hand-evaluated two-draw variance") {
    Tensor a({2}, {0.0, 0.0});
    Tensor b({2}, {2.0, 2.0});
    CHECK(model_uncertainty({a, b}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("model uncertainty is translation invariant") {
    std::mt19937_64 rng(4);
    std::vector<Tensor> grids, shifted;
    for (int t = 0; t < 5; ++t) {
        grids.push_back(Tensor::randn({3, 4}, rng));
        Tensor s = grids.back();
        for (auto& v : s.values()) v += 7.25;
        shifted.push_back(std::move(s));
    }
    CHECK(model_uncertainty(grids) == doctest::Approx(model_uncertainty(shifted)).epsilon(1e-12));
}

TEST_CASE("model uncertainty matches a two-pass oracle") {
    std::mt19937_64 rng(9);
    std::vector<Tensor> grids;
    for (int t = 0; t < 7; ++t) grids.push_back(Tensor::randn({4, 3}, rng));

    // Independent recomputation: explicit mean pass, then variance pass.
    const std::size_t n = grids[0].size();
    const double t_count = static_cast<double>(grids.size());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (const auto& g : grids) mean += g[i];
        mean /= t_count;
        double var = 0.0;
        for (const auto& g : grids) var += (g[i] - mean) * (g[i] - mean);
        total += var / t_count;
    }
    const double oracle = total / static_cast<double>(n);
    CHECK(std::abs(model_uncertainty(grids) - oracle) < 1e-10);
}

TEST_CASE("fewer than two draws is rejected") {
    Tensor g({2}, {1.0, 2.0});
    CHECK_THROWS_AS(model_uncertainty({g}), std::invalid_argument);
    Network net = Network::init(small_config(), 1);
    CHECK_THROWS_AS(MaskSet::sample(net, 1, 3), std::invalid_argument);
}

TEST_CASE("mismatched grid shapes are rejected") {
    Tensor a({2}, {1.0, 2.0});
    Tensor b({3}, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(model_uncertainty({a, b}), std::invalid_argument);
}

TEST_CASE("deterministic network has exactly zero model uncertainty") {
    Network net = Network::init(small_config(1.0), 17);
    auto samples = some_samples(6, 2);
    auto embs = embed(net, samples, MaskSet::sample(net, 5, 3));
    for (const auto& e : embs) CHECK(e.model_uncertainty == 0.0);
}

TEST_CASE("embedding is deterministic given a mask set and sorted by sample id") {
    Network net = Network::init(small_config(), 17);
    auto samples = some_samples(6, 2);
    MaskSet masks = MaskSet::sample(net, 10, 3);
    auto a = embed(net, samples, masks);
    auto b = embed(net, samples, masks);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].sample_id == b[i].sample_id);
        CHECK(a[i].mean == b[i].mean);
        CHECK(a[i].data_uncertainty == b[i].data_uncertainty);
        CHECK(a[i].model_uncertainty == b[i].model_uncertainty);
        if (i > 0) CHECK(a[i].sample_id > a[i - 1].sample_id);
    }
    for (const auto& e : a) {
        CHECK(e.data_uncertainty > 0.0);
        CHECK(e.model_uncertainty >= 0.0);
    }
}

TEST_CASE("model uncertainty shrinks as the keep probability rises") {
    // Monte-Carlo property: on a fixed architecture, rho 0.9 produces
    // less mask-induced variance than rho 0.5 on average over seeds.
    auto mean_sigma2_m = [](double rho) {
        double acc = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Network net = Network::init(small_config(rho), 100 + seed);
            auto samples = some_samples(3, seed);
            auto embs = embed(net, samples, MaskSet::sample(net, 8, seed * 7 + 1));
            for (const auto& e : embs) acc += e.model_uncertainty;
        }
        return acc;
    };
    CHECK(mean_sigma2_m(0.9) < mean_sigma2_m(0.5));
}

TEST_CASE("cosine similarity basics") {
    CHECK(cosine_similarity({1.0, 2.0}, {1.0, 2.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity({1.0, 0.0}, {0.0, 3.0}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cosine_similarity({0.5, -1.0}, {1.0, -2.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(cosine_similarity({0.0, 0.0}, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(cosine_similarity({1.0}, {1.0, 0.0}), std::invalid_argument);
}
