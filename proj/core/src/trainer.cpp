// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "ual/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ual/loss.hpp"

namespace ual {

void TrainConfig::validate() const {
    if (batch_p < 2 || batch_k < 2)
        throw std::invalid_argument("TrainConfig: P and K must both be at least 2");
    if (learning_rate < 0.0) throw std::invalid_argument("TrainConfig: negative learning rate");
    if (decay_factor <= 0.0) throw std::invalid_argument("TrainConfig: decay factor must be positive");
    if (rho <= 0.0 || rho > 1.0) throw std::invalid_argument("TrainConfig: rho must be in (0,1]");
    if (loss != "ual" && loss != "dnet")
        throw std::invalid_argument("TrainConfig: loss must be 'ual' or 'dnet', got '" + loss + "'");
    if (triplet_margin < 0.0) throw std::invalid_argument("TrainConfig: negative triplet margin");
    if (corrupt_prob < 0.0 || corrupt_prob > 1.0)
        throw std::invalid_argument("TrainConfig: corrupt_prob must be in [0,1]");
    for (double eta : corrupt_etas)
        if (eta < 0.0) throw std::invalid_argument("TrainConfig: negative corruption strength");
}

double TrainConfig::lr_at_epoch(std::size_t epoch) const {
    double lr = learning_rate;
    for (std::size_t d : decay_epochs)
        if (epoch >= d) lr *= decay_factor;
    return lr;
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

void AdamOptimizer::step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size())
        throw std::invalid_argument("AdamOptimizer: parameter/gradient count mismatch");
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i]->size(), 0.0);
            v_[i].assign(params[i]->size(), 0.0);
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double grad = g[j] + weight_decay_ * p[j];
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * grad;
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * grad * grad;
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

std::vector<LabeledSample> pk_sample(const std::vector<LabeledSample>& dataset, std::size_t p,
                                     std::size_t k, std::uint64_t seed) {
    std::map<int, std::vector<const LabeledSample*>> by_identity;
    for (const auto& s : dataset) by_identity[s.identity].push_back(&s);
    if (by_identity.size() < p)
        throw std::invalid_argument("pk_sample: dataset has " + std::to_string(by_identity.size()) +
                                    " identities, need " + std::to_string(p));

    std::vector<int> identities;
    identities.reserve(by_identity.size());
    for (const auto& [id, _] : by_identity) identities.push_back(id);

    std::mt19937_64 rng(seed);
    std::shuffle(identities.begin(), identities.end(), rng);
    identities.resize(p);

    std::vector<LabeledSample> batch;
    batch.reserve(p * k);
    for (int id : identities) {
        auto group = by_identity[id];
        std::sort(group.begin(), group.end(),
                  [](const LabeledSample* a, const LabeledSample* b) { return a->sample_id < b->sample_id; });
        if (group.size() >= k) {
            std::shuffle(group.begin(), group.end(), rng);
            for (std::size_t i = 0; i < k; ++i) batch.push_back(*group[i]);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
            for (std::size_t i = 0; i < k; ++i) batch.push_back(*group[pick(rng)]);
        }
    }
    return batch;
}

namespace {

struct StepLosses {
    double total, data_term, triplet_term;
};

// One forward/backward/update on an explicit batch. Shared by train()
// and the single-sample probe (which passes use_triplet = false).
StepLosses train_step(Network& net, AdamOptimizer& opt, const std::vector<LabeledSample>& batch,
                      const Tensor& mask, const TrainConfig& config, std::uint64_t step_seed,
                      bool use_triplet) {
    Tape tape;
    auto params = net.push_params(tape);
    NodeId classifier = net.classifier_node(params);

    std::vector<NodeId> mus;
    std::vector<int> labels;
    NodeId data_acc = tape.constant(Tensor::scalar(0.0));
    std::mt19937_64 noise_rng(step_seed);
    for (const auto& s : batch) {
        auto f = net.forward(tape, params, Tensor({s.input.size()}, s.input), mask);
        const std::size_t label = net.class_index(s.identity);
        NodeId sample_loss;
        if (config.loss == "ual") {
            sample_loss = data_uncertainty_loss(tape, f.mu, f.sigma2, label, classifier).loss;
        } else {
            NodeId sigma2_vec = tape.mean_rows(f.sigma2_grid);
            const double floor = gaussian_entropy(net.config().channels, config.dnet_entropy_sigma2);
            sample_loss = sampling_baseline_loss(tape, f.mu, sigma2_vec, label, classifier,
                                                 config.dnet_lambda, floor, noise_rng());
        }
        data_acc = tape.add(data_acc, sample_loss);
        mus.push_back(f.mu);
        labels.push_back(s.identity);
    }
    NodeId data_term = tape.scale(data_acc, 1.0 / static_cast<double>(batch.size()));

    NodeId total = data_term;
    double triplet_value = 0.0;
    if (use_triplet) {
        NodeId trip = triplet_loss(tape, mus, labels, config.triplet_margin);
        triplet_value = tape.value(trip).item();
        total = tape.add(data_term, trip);
    }

    StepLosses losses{tape.value(total).item(), tape.value(data_term).item(), triplet_value};
    tape.backward(total);

    std::vector<Tensor*> ptrs;
    std::vector<const Tensor*> grads;
    for (std::size_t i = 0; i < net.param_count(); ++i) {
        ptrs.push_back(&net.param(i));
        grads.push_back(&tape.grad(params[i]));
    }
    opt.step(ptrs, grads);
    return losses;
}

std::vector<int> sorted_identities(const std::vector<LabeledSample>& dataset) {
    std::vector<int> ids;
    for (const auto& s : dataset)
        if (std::find(ids.begin(), ids.end(), s.identity) == ids.end()) ids.push_back(s.identity);
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace

TrainOutput train(const std::vector<LabeledSample>& dataset, const TrainConfig& config) {
    config.validate();
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

    const auto identities = sorted_identities(dataset);
    ModelConfig mc;
    mc.d_in = dataset.front().input.size();
    mc.hidden = config.hidden;
    mc.grid_h = config.grid_h;
    mc.grid_w = config.grid_w;
    mc.channels = config.channels;
    mc.num_classes = identities.size();
    mc.rho = config.rho;

    std::mt19937_64 rng(config.seed);
    TrainOutput out;
    out.net = Network::init(mc, rng());
    out.net.set_class_identities(identities);

    AdamOptimizer opt(config.learning_rate, config.beta1, config.beta2, config.adam_eps,
                      config.weight_decay);

    Network last_good = out.net;
    std::size_t iteration = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        opt.set_learning_rate(config.lr_at_epoch(epoch));
        for (std::size_t it = 0; it < config.iterations_per_epoch; ++it, ++iteration) {
            auto batch = pk_sample(dataset, config.batch_p, config.batch_k, rng());
            if (config.corrupt_prob > 0.0 && !config.corrupt_etas.empty()) {
                std::uniform_real_distribution<double> coin(0.0, 1.0);
                std::uniform_int_distribution<std::size_t> pick(0, config.corrupt_etas.size() - 1);
                for (auto& s : batch) {
                    const double u = coin(rng);
                    const std::size_t which = pick(rng);
                    const std::uint64_t noise_seed = rng();
                    if (u < config.corrupt_prob)
                        s = corrupt(s, config.corrupt_etas[which], noise_seed);
                }
            }
            Tensor mask = out.net.sample_mask(rng());
            StepLosses losses;
            try {
                losses = train_step(out.net, opt, batch, mask, config, rng(), /*use_triplet=*/true);
            } catch (const std::runtime_error&) {
                throw TrainingDiverged(iteration, std::move(last_good));
            }
            if (!std::isfinite(losses.total)) throw TrainingDiverged(iteration, std::move(last_good));
            out.history.push_back({iteration, losses.total, losses.data_term, losses.triplet_term});
            last_good = out.net;
        }
    }
    return out;
}

double model_change_probe(const Network& net, const LabeledSample& sample, std::size_t iterations,
                          double learning_rate, std::uint64_t seed, const TrainConfig& config) {
    Network clone = net;
    AdamOptimizer opt(learning_rate, config.beta1, config.beta2, config.adam_eps,
                      config.weight_decay);
    std::mt19937_64 rng(seed);
    TrainConfig probe_config = config;
    probe_config.loss = "ual";  // single sample admits no triplet term
    for (std::size_t it = 0; it < iterations; ++it) {
        Tensor mask = clone.sample_mask(rng());
        train_step(clone, opt, {sample}, mask, probe_config, rng(), /*use_triplet=*/false);
    }

    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < net.param_count(); ++i) {
        const Tensor& before = net.param(i);
        const Tensor& after = clone.param(i);
        for (std::size_t j = 0; j < before.size(); ++j) acc += std::abs(after[j] - before[j]);
        count += before.size();
    }
    return acc / static_cast<double>(count);
}

}  // namespace ual
