// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "ual/dataset.hpp"
#include "ual/io.hpp"

using namespace ual;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string first_line(const std::string& path) {
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    return line;
}

}  // namespace

TEST_CASE("float text is round-trip exact") {
    for (double v : {1.0 / 3.0, 0.1, 1e-300, 2.5e17, -123.456789012345678, 3.5e-4}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("dataset files round-trip exactly") {
    DatasetSpec spec;
    spec.num_identities = 3;
    spec.samples_per_identity = 4;
    spec.d_in = 5;
    spec.num_cameras = 2;
    auto samples = generate(spec);
    samples[1] = corrupt(samples[1], 2.0, 7);

    TempFile f("fmt_dataset.txt");
    write_dataset(f.path, samples, spec.d_in);
    CHECK(first_line(f.path) == "ual-dataset v1 D_in=5");

    auto back = read_dataset(f.path);
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].sample_id == samples[i].sample_id);
        CHECK(back[i].identity == samples[i].identity);
        CHECK(back[i].camera == samples[i].camera);
        CHECK(back[i].eta == samples[i].eta);
        CHECK(back[i].input == samples[i].input);
    }
}

TEST_CASE("dataset reader rejects foreign headers") {
    TempFile f("fmt_bogus.txt");
    std::ofstream(f.path) << "not-a-dataset\n1,2,3\n";
    CHECK_THROWS_AS(read_dataset(f.path), std::runtime_error);
    CHECK_THROWS_AS(read_dataset("does_not_exist_anywhere.txt"), std::runtime_error);
}

TEST_CASE("checkpoints round-trip to byte-identical rewrites") {
    ModelConfig mc;
    mc.d_in = 6;
    mc.hidden = 7;
    mc.channels = 4;
    mc.num_classes = 3;
    mc.rho = 0.7;
    Network net = Network::init(mc, 31);
    net.set_class_identities({5, 9, 12});

    TempFile a("fmt_ckpt_a.txt"), b("fmt_ckpt_b.txt");
    write_checkpoint(a.path, net);
    CHECK(first_line(a.path) == "ual-model v1");

    Network back = load_checkpoint(a.path);
    CHECK(back.config().d_in == mc.d_in);
    CHECK(back.config().rho == mc.rho);
    CHECK(back.class_identities() == std::vector<int>{5, 9, 12});
    REQUIRE(back.param_count() == net.param_count());
    for (std::size_t i = 0; i < net.param_count(); ++i)
        CHECK(back.param(i).values() == net.param(i).values());

    write_checkpoint(b.path, back);
    CHECK(slurp(a.path) == slurp(b.path));
}

TEST_CASE("embedding files round-trip exactly") {
    std::vector<GaussianEmbedding> embs(2);
    embs[0].sample_id = 3;
    embs[0].identity = 1;
    embs[0].camera = 0;
    embs[0].mean = {0.1, -0.2, 1.0 / 3.0};
    embs[0].data_uncertainty = 0.7;
    embs[0].model_uncertainty = 0.01;
    embs[1].sample_id = 9;
    embs[1].identity = 2;
    embs[1].camera = 1;
    embs[1].mean = {1e-17, 2.0, -3.5};
    embs[1].data_uncertainty = 1.3;
    embs[1].model_uncertainty = 0.0;

    TempFile f("fmt_embed.txt");
    write_embeddings(f.path, embs, 10);
    CHECK(first_line(f.path) == "ual-embed v1 c=3 T=10");

    auto back = read_embeddings(f.path);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].sample_id == embs[i].sample_id);
        CHECK(back[i].identity == embs[i].identity);
        CHECK(back[i].camera == embs[i].camera);
        CHECK(back[i].mean == embs[i].mean);
        CHECK(back[i].data_uncertainty == embs[i].data_uncertainty);
        CHECK(back[i].model_uncertainty == embs[i].model_uncertainty);
    }
}

TEST_CASE("train config round-trips every field") {
    TrainConfig c;
    c.epochs = 7;
    c.iterations_per_epoch = 13;
    c.batch_p = 3;
    c.batch_k = 5;
    c.learning_rate = 1.25e-3;
    c.decay_epochs = {2, 4, 6};
    c.decay_factor = 0.5;
    c.beta1 = 0.8;
    c.beta2 = 0.95;
    c.adam_eps = 1e-9;
    c.weight_decay = 2e-4;
    c.seed = 424242;
    c.rho = 0.6;
    c.triplet_margin = 0.25;
    c.corrupt_prob = 0.4;
    c.corrupt_etas = {0.25, 1.5};
    c.loss = "dnet";
    c.dnet_lambda = 0.02;
    c.dnet_entropy_sigma2 = 0.75;
    c.hidden = 24;
    c.grid_h = 3;
    c.grid_w = 1;
    c.channels = 8;

    TempFile f("fmt_config.txt");
    write_config(f.path, c);
    TrainConfig back = read_config(f.path);
    CHECK(back.epochs == c.epochs);
    CHECK(back.iterations_per_epoch == c.iterations_per_epoch);
    CHECK(back.batch_p == c.batch_p);
    CHECK(back.batch_k == c.batch_k);
    CHECK(back.learning_rate == c.learning_rate);
    CHECK(back.decay_epochs == c.decay_epochs);
    CHECK(back.decay_factor == c.decay_factor);
    CHECK(back.beta1 == c.beta1);
    CHECK(back.beta2 == c.beta2);
    CHECK(back.adam_eps == c.adam_eps);
    CHECK(back.weight_decay == c.weight_decay);
    CHECK(back.seed == c.seed);
    CHECK(back.rho == c.rho);
    CHECK(back.triplet_margin == c.triplet_margin);
    CHECK(back.corrupt_prob == c.corrupt_prob);
    CHECK(back.corrupt_etas == c.corrupt_etas);
    CHECK(back.loss == c.loss);
    CHECK(back.dnet_lambda == c.dnet_lambda);
    CHECK(back.dnet_entropy_sigma2 == c.dnet_entropy_sigma2);
    CHECK(back.hidden == c.hidden);
    CHECK(back.grid_h == c.grid_h);
    CHECK(back.grid_w == c.grid_w);
    CHECK(back.channels == c.channels);
}

TEST_CASE("config reader rejects unknown keys and malformed lines") {
    TempFile f("fmt_badcfg.txt");
    std::ofstream(f.path) << "flux_capacitance = 1.21\n";
    CHECK_THROWS_AS(read_config(f.path), std::runtime_error);
    std::ofstream(f.path) << "no equals sign here\n";
    CHECK_THROWS_AS(read_config(f.path), std::runtime_error);
}

TEST_CASE("report writers emit their headers") {
    TempFile h("fmt_history.txt"), s("fmt_sweep.txt"), g("fmt_gate.txt"), fu("fmt_fusion.txt"),
        e("fmt_eval.txt");

    write_history(h.path, {{0, 2.0, 1.5, 0.5}});
    CHECK(first_line(h.path) == "iteration,loss_total,loss_data,loss_triplet");

    write_sweep(s.path, {{0.5, 12, 0.75}});
    CHECK(first_line(s.path) == "alpha,retained,mAP");

    GateResult gr;
    gr.thresholds = {1.5, 2.5, 0.3};
    gr.entries = {{7, 2.0, 3.0, true}};
    gr.kept_ids = {7};
    write_gate_report(g.path, gr);
    CHECK(first_line(g.path) == "gate alpha=0.29999999999999999 gamma_d=1.5 gamma_m=2.5");

    write_fusion_report(fu.path, {{1, 0, {0.6, 0.4}}});
    CHECK(first_line(fu.path) == "identity,camera,n,weights");

    EvalResult er;
    er.mean_ap = 0.5;
    er.rank1 = 0.25;
    er.scored = 4;
    er.skipped = 1;
    write_eval_results(e.path, er);
    CHECK(slurp(e.path) == "mAP,0.5\nrank1,0.25\nscored,4\nskipped,1\n");
}
