// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <string>
#include <vector>

#include "ual/dataset.hpp"
#include "ual/inference.hpp"
#include "ual/metrics.hpp"
#include "ual/model.hpp"
#include "ual/trainer.hpp"

namespace ual {

/// Shortest round-trip-exact float64 text (17 significant digits).
std::string format_double(double v);

// Dataset files: header "ual-dataset v1 D_in=<n>", then one sample per
// line "sample_id,identity,camera,eta,v1,...,vD".
void write_dataset(const std::string& path, const std::vector<LabeledSample>& samples,
                   std::size_t d_in);
std::vector<LabeledSample> read_dataset(const std::string& path);

// Checkpoints: header "ual-model v1", a dims line, the classifier's
// identity list, then named parameter blocks.
void write_checkpoint(const std::string& path, const Network& net);
Network load_checkpoint(const std::string& path);

// Embedding files: header "ual-embed v1 c=<n> T=<n>", then per line
// "sample_id,identity,camera,sigma2_d,sigma2_m,mu_1,...,mu_c".
void write_embeddings(const std::string& path, const std::vector<GaussianEmbedding>& embeddings,
                      std::size_t t_draws);
std::vector<GaussianEmbedding> read_embeddings(const std::string& path);

// Train config: flat "key = value" lines covering every TrainConfig field.
void write_config(const std::string& path, const TrainConfig& config);
TrainConfig read_config(const std::string& path);

void write_history(const std::string& path, const std::vector<HistoryRow>& history);

void write_gate_report(const std::string& path, const GateResult& result);
void write_sweep(const std::string& path, const std::vector<SweepRow>& rows);
void write_fusion_report(const std::string& path, const std::vector<FusionGroupReport>& report);
void write_eval_results(const std::string& path, const EvalResult& result);

}  // namespace ual
