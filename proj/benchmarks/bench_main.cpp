// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include <benchmark/benchmark.h>

#include "ual/dataset.hpp"
#include "ual/inference.hpp"
#include "ual/loss.hpp"
#include "ual/metrics.hpp"
#include "ual/model.hpp"

namespace {

ual::ModelConfig default_model() {
    ual::ModelConfig c;
    c.num_classes = 50;
    return c;
}

void BM_ForwardBackward(benchmark::State& state) {
    ual::Network net = ual::Network::init(default_model(), 1);
    net.set_class_identities([] {
        std::vector<int> ids(50);
        for (int i = 0; i < 50; ++i) ids[i] = i;
        return ids;
    }());
    std::mt19937_64 rng(2);
    ual::Tensor input = ual::Tensor::randn({32}, rng);
    const ual::Tensor mask = net.sample_mask(3);
    for (auto _ : state) {
        ual::Tape tape;
        auto params = net.push_params(tape);
        auto f = net.forward(tape, params, input, mask);
        auto loss = ual::data_uncertainty_loss(tape, f.mu, f.sigma2, 7, params.back());
        tape.backward(loss.loss);
        benchmark::DoNotOptimize(tape.grad(params[0])[0]);
    }
}
BENCHMARK(BM_ForwardBackward);

void BM_EmbedBatch(benchmark::State& state) {
    ual::Network net = ual::Network::init(default_model(), 1);
    ual::DatasetSpec spec;
    spec.num_identities = 10;
    spec.samples_per_identity = 4;
    auto samples = ual::generate(spec);
    auto masks = ual::MaskSet::sample(net, 10, 5);
    for (auto _ : state) {
        auto embs = ual::embed(net, samples, masks);
        benchmark::DoNotOptimize(embs.front().data_uncertainty);
    }
}
BENCHMARK(BM_EmbedBatch);

void BM_SingleQueryEval(benchmark::State& state) {
    ual::Network net = ual::Network::init(default_model(), 1);
    ual::DatasetSpec spec;
    spec.num_identities = 20;
    spec.samples_per_identity = 6;
    spec.num_cameras = 2;
    auto split = ual::split_multi_query(ual::generate(spec), 0.5, ual::CorruptionPlan{0.0, 0.0, 1}, 2);
    auto masks = ual::MaskSet::sample(net, 4, 5);
    auto queries = ual::embed(net, split.queries, masks);
    auto gallery = ual::embed(net, split.gallery, masks);
    for (auto _ : state) {
        auto r = ual::single_query_eval(queries, gallery);
        benchmark::DoNotOptimize(r.mean_ap);
    }
}
BENCHMARK(BM_SingleQueryEval);

}  // namespace

BENCHMARK_MAIN();
