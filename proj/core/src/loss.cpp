// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "ual/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ual {

namespace {

std::vector<double> normalized(const std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double denom = std::sqrt(sq) + Tape::kNormEps;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / denom;
    return out;
}

std::vector<double> cosine_logits(const std::vector<double>& mu, const Tensor& classifier) {
    if (classifier.rank() != 2 || classifier.shape()[1] != mu.size())
        throw std::invalid_argument("posterior: classifier shape (" + classifier.shape_string() +
                                    ") does not match feature dimension " + std::to_string(mu.size()));
    const std::size_t n = classifier.shape()[0], c = classifier.shape()[1];
    const auto mun = normalized(mu);
    std::vector<double> logits(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> w(classifier.data() + i * c, classifier.data() + (i + 1) * c);
        const auto wn = normalized(w);
        double d = 0.0;
        for (std::size_t j = 0; j < c; ++j) d += wn[j] * mun[j];
        logits[i] = d;
    }
    return logits;
}

constexpr double kDistEps = 1e-12;  // keeps sqrt differentiable at coincident features

}  // namespace

std::vector<double> posterior(const std::vector<double>& mu, const Tensor& classifier,
                              double sigma2) {
    if (sigma2 <= 0.0) throw std::invalid_argument("posterior: sigma2 must be positive");
    auto logits = cosine_logits(mu, classifier);
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    double z = 0.0;
    for (auto& v : logits) {
        v = std::exp((v - m) / sigma2);
        z += v;
    }
    for (auto& v : logits) v /= z;
    return logits;
}

double posterior_nll(const std::vector<double>& mu, const Tensor& classifier, double sigma2,
                     std::size_t label) {
    auto p = posterior(mu, classifier, sigma2);
    if (label >= p.size()) throw std::invalid_argument("posterior_nll: label out of range");
    return -std::log(p[label]);
}

NodeId cross_entropy(Tape& tape, NodeId mu, std::size_t label, NodeId classifier) {
    const std::size_t n = tape.value(classifier).shape()[0];
    if (label >= n)
        throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                    " out of range for " + std::to_string(n) + " classes");
    NodeId mun = tape.l2_normalize(mu);
    NodeId wn = tape.l2_normalize(classifier);
    const std::size_t c = tape.value(mu).size();
    NodeId logits = tape.reshape(tape.matmul(wn, tape.reshape(mun, {c, 1})), {n});
    NodeId m = tape.max_all(logits);
    NodeId lse = tape.add(tape.log(tape.sum_all(tape.exp(tape.sub_scalar_node(logits, m)))), m);
    return tape.sub(lse, tape.index(logits, label));
}

DataLossResult data_uncertainty_loss(Tape& tape, NodeId mu, NodeId sigma2, std::size_t label,
                                     NodeId classifier) {
    if (tape.value(sigma2).size() != 1 || tape.value(sigma2).item() <= 0.0)
        throw std::invalid_argument("data_uncertainty_loss: sigma2 must be a positive scalar");
    DataLossResult r;
    r.ce_inner = cross_entropy(tape, mu, label, classifier);
    r.loss = tape.add(tape.div(r.ce_inner, sigma2), tape.log(sigma2));
    return r;
}

NodeId triplet_loss(Tape& tape, const std::vector<NodeId>& features, const std::vector<int>& labels,
                    double margin) {
    const std::size_t n = features.size();
    if (n != labels.size() || n < 2)
        throw std::invalid_argument("triplet_loss: need at least 2 labeled features");
    if (std::all_of(labels.begin(), labels.end(), [&](int l) { return l == labels[0]; }))
        throw std::invalid_argument("triplet_loss: batch contains a single identity, no negatives");

    std::vector<NodeId> nf(n);
    for (std::size_t i = 0; i < n; ++i) nf[i] = tape.l2_normalize(features[i]);

    // Hard-pair selection on forward values; ties resolved to the lowest index.
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const Tensor& a = tape.value(nf[i]);
            const Tensor& b = tape.value(nf[j]);
            double sq = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double d = a[k] - b[k];
                sq += d * d;
            }
            dist[i][j] = dist[j][i] = std::sqrt(sq + kDistEps);
        }

    auto pair_distance = [&](std::size_t i, std::size_t j) {
        NodeId diff = tape.sub(nf[i], nf[j]);
        return tape.sqrt(tape.add_scalar(tape.sum_all(tape.mul(diff, diff)), kDistEps));
    };

    NodeId acc = tape.constant(Tensor::scalar(0.0));
    std::size_t anchors = 0;
    for (std::size_t a = 0; a < n; ++a) {
        std::size_t hard_pos = n, hard_neg = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == a) continue;
            if (labels[j] == labels[a]) {
                if (hard_pos == n || dist[a][j] > dist[a][hard_pos]) hard_pos = j;
            } else {
                if (hard_neg == n || dist[a][j] < dist[a][hard_neg]) hard_neg = j;
            }
        }
        if (hard_pos == n) continue;  // anchor without positives contributes nothing
        NodeId term = tape.relu(tape.add_scalar(
            tape.sub(pair_distance(a, hard_pos), pair_distance(a, hard_neg)), margin));
        acc = tape.add(acc, term);
        ++anchors;
    }
    if (anchors == 0)
        throw std::invalid_argument("triplet_loss: no anchor has a positive pair");
    return tape.scale(acc, 1.0 / static_cast<double>(anchors));
}

NodeId sampling_baseline_loss(Tape& tape, NodeId mu, NodeId sigma2_vec, std::size_t label,
                              NodeId classifier, double lambda, double entropy_floor,
                              std::uint64_t seed) {
    // Copy what we need out of the node before pushing new nodes: the
    // tape may reallocate its storage and invalidate value references.
    const Tensor s2 = tape.value(sigma2_vec);
    for (std::size_t i = 0; i < s2.size(); ++i)
        if (s2[i] <= 0.0)
            throw std::invalid_argument("sampling_baseline_loss: sigma2 must be positive element-wise");
    if (!tape.value(mu).same_shape(s2))
        throw std::invalid_argument("sampling_baseline_loss: mu and sigma2 shapes differ");

    std::mt19937_64 rng(seed);
    NodeId eps = tape.constant(Tensor::randn(s2.shape(), rng));
    NodeId z = tape.add(mu, tape.mul(eps, tape.sqrt(sigma2_vec)));
    NodeId ce = cross_entropy(tape, z, label, classifier);

    const double d = static_cast<double>(s2.size());
    const double const_term = 0.5 * d * std::log(2.0 * std::numbers::pi * std::numbers::e);
    NodeId entropy = tape.add_scalar(tape.scale(tape.sum_all(tape.log(sigma2_vec)), 0.5), const_term);
    NodeId shortfall = tape.relu(tape.scale(tape.add_scalar(entropy, -entropy_floor), -1.0));
    return tape.add(ce, tape.scale(shortfall, lambda));
}

double gaussian_entropy(std::size_t dim, double sigma2) {
    return 0.5 * static_cast<double>(dim) *
           std::log(2.0 * std::numbers::pi * std::numbers::e * sigma2);
}

}  // namespace ual
