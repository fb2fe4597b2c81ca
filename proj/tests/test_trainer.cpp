// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include <doctest.h>

#include <cmath>

#include "ual/dataset.hpp"
#include "ual/loss.hpp"
#include "ual/trainer.hpp"

using namespace ual;

namespace {

std::vector<LabeledSample> small_dataset(std::uint64_t seed = 3) {
    DatasetSpec spec;
    spec.num_identities = 6;
    spec.samples_per_identity = 6;
    spec.d_in = 8;
    spec.num_cameras = 2;
    spec.seed = seed;
    return generate(spec);
}

TrainConfig small_config() {
    TrainConfig c;
    c.epochs = 3;
    c.iterations_per_epoch = 30;
    c.batch_p = 4;
    c.batch_k = 2;
    c.learning_rate = 3e-3;
    c.decay_epochs = {2};
    c.hidden = 12;
    c.channels = 6;
    c.seed = 7;
    return c;
}

}  // namespace

TEST_CASE("pk sampling counts and identity coverage") {
    auto batch = pk_sample(small_dataset(), 2, 2, 5);
    REQUIRE(batch.size() == 4);
    CHECK(batch[0].identity == batch[1].identity);
    CHECK(batch[2].identity == batch[3].identity);
    CHECK(batch[0].identity != batch[2].identity);
}

TEST_CASE("scarce identities are sampled with replacement") {
    std::vector<LabeledSample> data;
    for (int id = 0; id < 2; ++id) {
        LabeledSample s;
        s.sample_id = id;
        s.identity = id;
        s.input = {1.0, 2.0};
        data.push_back(s);
    }
    auto batch = pk_sample(data, 2, 4, 5);
    REQUIRE(batch.size() == 8);
    for (std::size_t i = 0; i < 4; ++i) CHECK(batch[i].sample_id == batch[0].sample_id);
}

TEST_CASE("pk sampling is deterministic and validates identity count") {
    auto data = small_dataset();
    auto a = pk_sample(data, 3, 2, 42);
    auto b = pk_sample(data, 3, 2, 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].sample_id == b[i].sample_id);
    CHECK_THROWS_AS(pk_sample(data, 100, 2, 1), std::invalid_argument);
}

TEST_CASE("adam matches a scalar reference over 100 steps") {
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.05;

    Tensor p = Tensor::scalar(3.0);
    AdamOptimizer opt(lr, b1, b2, eps, wd);

    // Reference: minimize f(x) = x^2 with the same hyperparameters,
    // written out scalar by scalar.
    double x = 3.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 100; ++t) {
        const Tensor grad = Tensor::scalar(2.0 * p.item());
        opt.step({&p}, {&grad});

        const double g = 2.0 * x + wd * x;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double mhat = m / (1.0 - std::pow(b1, t));
        const double vhat = v / (1.0 - std::pow(b2, t));
        x -= lr * mhat / (std::sqrt(vhat) + eps);

        CHECK(std::abs(p.item() - x) < 1e-12);
    }
}

TEST_CASE("learning rate schedule applies every passed decay epoch") {
    TrainConfig c;
    c.learning_rate = 1.0;
    c.decay_epochs = {15, 25};
    c.decay_factor = 0.1;
    CHECK(c.lr_at_epoch(0) == 1.0);
    CHECK(c.lr_at_epoch(14) == 1.0);
    CHECK(c.lr_at_epoch(15) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(c.lr_at_epoch(24) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(c.lr_at_epoch(29) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("config validation rejects bad settings") {
    TrainConfig c;
    c.batch_p = 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.loss = "banana";
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.rho = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("zero epochs returns the untouched initialization") {
    TrainConfig c = small_config();
    c.epochs = 0;
    auto a = train(small_dataset(), c);
    auto b = train(small_dataset(), c);
    CHECK(a.history.empty());
    REQUIRE(a.net.param_count() == b.net.param_count());
    for (std::size_t i = 0; i < a.net.param_count(); ++i)
        CHECK(a.net.param(i).values() == b.net.param(i).values());
}

TEST_CASE("training reduces the loss") {
    auto out = train(small_dataset(), small_config());
    REQUIRE(out.history.size() == 90);
    const std::size_t tenth = out.history.size() / 10;
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < tenth; ++i) {
        first += out.history[i].total;
        last += out.history[out.history.size() - 1 - i].total;
    }
    CHECK(last < first);
    // the recorded terms decompose the total
    for (const auto& row : out.history)
        CHECK(row.total == doctest::Approx(row.data_term + row.triplet_term).epsilon(1e-9));
}

TEST_CASE("identical seeds give bit-identical trained parameters") {
    TrainConfig c = small_config();
    c.epochs = 1;
    c.iterations_per_epoch = 10;
    auto a = train(small_dataset(), c);
    auto b = train(small_dataset(), c);
    REQUIRE(a.net.param_count() == b.net.param_count());
    for (std::size_t i = 0; i < a.net.param_count(); ++i)
        CHECK(a.net.param(i).values() == b.net.param(i).values());
}

TEST_CASE("the dnet loss variant trains end to end") {
    TrainConfig c = small_config();
    c.loss = "dnet";
    c.epochs = 1;
    c.iterations_per_epoch = 5;
    auto out = train(small_dataset(), c);
    CHECK(out.history.size() == 5);
    for (const auto& row : out.history) CHECK(std::isfinite(row.total));
}

TEST_CASE("unit variance head reduces the data loss gradient to cross entropy") {
    ModelConfig mc;
    mc.d_in = 8;
    mc.hidden = 10;
    mc.channels = 5;
    mc.num_classes = 4;
    Network net = Network::init(mc, 9);
    net.set_class_identities({0, 1, 2, 3});
    // Freeze the uncertainty head at exactly 1: zero weights, bias at
    // the softplus preimage of 1.
    for (auto& v : net.param("head_sigma.w").values()) v = 0.0;
    for (auto& v : net.param("head_sigma.b").values()) v = std::log(std::exp(1.0) - 1.0);

    std::mt19937_64 rng(4);
    Tensor input = Tensor::randn({8}, rng);
    const Tensor mask = net.sample_mask(2);

    auto grads_of = [&](bool full) {
        Tape tape;
        auto params = net.push_params(tape);
        auto f = net.forward(tape, params, input, mask);
        NodeId loss = full ? data_uncertainty_loss(tape, f.mu, f.sigma2, 1, params.back()).loss
                           : cross_entropy(tape, f.mu, 1, params.back());
        tape.backward(loss);
        std::vector<Tensor> out;
        for (NodeId id : params) out.push_back(tape.grad(id));
        return out;
    };
    auto g_full = grads_of(true);
    auto g_ce = grads_of(false);
    for (std::size_t i = 0; i < net.param_count(); ++i) {
        if (net.param_name(i).rfind("head_sigma", 0) == 0) continue;  // carries the log term
        for (std::size_t j = 0; j < g_full[i].size(); ++j)
            CHECK(g_full[i][j] == doctest::Approx(g_ce[i][j]).epsilon(1e-12));
    }
}

TEST_CASE("a divergent run aborts with the iteration and last good state") {
    TrainConfig c = small_config();
    c.epochs = 1;
    c.iterations_per_epoch = 5;
    c.learning_rate = 1e150;  // one step blows parameters past overflow
    try {
        train(small_dataset(), c);
        FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& e) {
        CHECK(e.iteration < 5);
        CHECK(e.last_good.param_count() > 0);
        for (std::size_t i = 0; i < e.last_good.param_count(); ++i)
            CHECK(e.last_good.param(i).all_finite());
    }
}

TEST_CASE("probe is zero without updates and leaves the network untouched") {
    auto data = small_dataset();
    TrainConfig c = small_config();
    c.epochs = 1;
    c.iterations_per_epoch = 5;
    auto out = train(data, c);

    CHECK(model_change_probe(out.net, data[0], 10, 0.0, 1) == 0.0);
    CHECK(model_change_probe(out.net, data[0], 0, 0.01, 1) == 0.0);

    const Tensor before = out.net.param("head_mu.w");
    const double change = model_change_probe(out.net, data[0], 5, 0.01, 1);
    CHECK(change > 0.0);
    CHECK(out.net.param("head_mu.w").values() == before.values());
}
