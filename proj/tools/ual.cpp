// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)
//
// Single entry point wiring data generation, training, embedding,
// retrieval evaluation, reliability tooling and the uncertainty probes
// into reproducible pipelines. Exit codes: 0 success, 2 validation
// error, 3 numerical failure.

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "ual/io.hpp"
#include "ual/loss.hpp"

namespace {

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string field;
    while (std::getline(ss, field, ','))
        if (!field.empty()) out.push_back(std::stod(field));
    return out;
}

void echo(const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::cout << "# " << cmd;
    for (const auto& [k, v] : kv) std::cout << " " << k << "=" << v;
    std::cout << "\n";
}

std::string fd(double v) { return ual::format_double(v); }

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    ual::DatasetSpec spec;
    double query_fraction = 0.5;
    double corrupt_prob = 0.5;
    double corrupt_eta = 2.0;
    std::string out = ".";
};

int run_gen_data(const GenDataArgs& a) {
    echo("gen-data", {{"num-identities", std::to_string(a.spec.num_identities)},
                      {"samples-per-identity", std::to_string(a.spec.samples_per_identity)},
                      {"d-in", std::to_string(a.spec.d_in)},
                      {"cameras", std::to_string(a.spec.num_cameras)},
                      {"spread", fd(a.spec.cluster_spread)},
                      {"scale", fd(a.spec.inter_cluster_scale)},
                      {"center-offset", fd(a.spec.center_offset)},
                      {"seed", std::to_string(a.spec.seed)},
                      {"query-fraction", fd(a.query_fraction)},
                      {"corrupt-prob", fd(a.corrupt_prob)},
                      {"corrupt-eta", fd(a.corrupt_eta)},
                      {"out", a.out}});

    // The training half is written clean; quality variation is applied
    // on the fly by the trainer so noise realizations stay fresh.
    auto all = ual::generate(a.spec);
    auto [train, eval] = ual::split_by_identity(all);

    ual::CorruptionPlan plan{a.corrupt_prob, a.corrupt_eta, a.spec.seed ^ 0x636f727275707431ULL};
    auto single = ual::split_multi_query(eval, a.query_fraction, plan, a.spec.seed + 101);
    plan.seed = a.spec.seed ^ 0x636f727275707432ULL;
    auto multi = ual::split_multi_query(eval, a.query_fraction, plan, a.spec.seed + 202);

    namespace fs = std::filesystem;
    fs::create_directories(a.out);
    const fs::path dir(a.out);
    ual::write_dataset((dir / "train.txt").string(), train, a.spec.d_in);
    ual::write_dataset((dir / "query.txt").string(), single.queries, a.spec.d_in);
    ual::write_dataset((dir / "gallery.txt").string(), single.gallery, a.spec.d_in);
    ual::write_dataset((dir / "mq-query.txt").string(), multi.queries, a.spec.d_in);
    ual::write_dataset((dir / "mq-gallery.txt").string(), multi.gallery, a.spec.d_in);
    std::cout << "wrote " << train.size() << " train, " << single.queries.size() << " query, "
              << single.gallery.size() << " gallery samples to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- helpers

ual::Network load_model(const std::string& path) { return ual::load_checkpoint(path); }

std::vector<ual::GaussianEmbedding> embed_file(const ual::Network& net, const std::string& data,
                                               std::size_t t_draws, std::uint64_t seed) {
    auto samples = ual::read_dataset(data);
    auto masks = ual::MaskSet::sample(net, t_draws, seed);
    return ual::embed(net, samples, masks);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uncertainty-aware embedding retrieval"};
    app.require_subcommand(1);

    // gen-data
    GenDataArgs gen;
    auto* cmd_gen = app.add_subcommand("gen-data", "generate the synthetic dataset and splits");
    cmd_gen->add_option("--num-identities", gen.spec.num_identities);
    cmd_gen->add_option("--samples-per-identity", gen.spec.samples_per_identity);
    cmd_gen->add_option("--d-in", gen.spec.d_in);
    cmd_gen->add_option("--cameras", gen.spec.num_cameras);
    cmd_gen->add_option("--spread", gen.spec.cluster_spread);
    cmd_gen->add_option("--scale", gen.spec.inter_cluster_scale);
    cmd_gen->add_option("--center-offset", gen.spec.center_offset);
    cmd_gen->add_option("--seed", gen.spec.seed);
    cmd_gen->add_option("--query-fraction", gen.query_fraction);
    cmd_gen->add_option("--corrupt-prob", gen.corrupt_prob);
    cmd_gen->add_option("--corrupt-eta", gen.corrupt_eta);
    cmd_gen->add_option("--out", gen.out)->required();

    // init-config
    std::string cfg_out;
    auto* cmd_init = app.add_subcommand("init-config", "write a config file with all defaults");
    cmd_init->add_option("--out", cfg_out)->required();

    // train
    std::string tr_data, tr_out, tr_config, tr_history;
    ual::TrainConfig tr_overrides;
    auto* cmd_train = app.add_subcommand("train", "train a network");
    cmd_train->add_option("--data", tr_data)->required();
    cmd_train->add_option("--out", tr_out)->required();
    cmd_train->add_option("--config", tr_config);
    cmd_train->add_option("--history", tr_history);
    auto* o_seed = cmd_train->add_option("--seed", tr_overrides.seed);
    auto* o_rho = cmd_train->add_option("--rho", tr_overrides.rho);
    auto* o_epochs = cmd_train->add_option("--epochs", tr_overrides.epochs);
    auto* o_loss = cmd_train->add_option("--loss", tr_overrides.loss);
    std::string tr_corrupt_etas;
    auto* o_cprob = cmd_train->add_option("--corrupt-prob", tr_overrides.corrupt_prob);
    auto* o_cetas = cmd_train->add_option("--corrupt-etas", tr_corrupt_etas);

    // embed
    std::string em_model, em_data, em_out;
    std::size_t em_t = 10;
    std::uint64_t em_seed = 1;
    auto* cmd_embed = app.add_subcommand("embed", "Monte-Carlo embed a dataset file");
    cmd_embed->add_option("--model", em_model)->required();
    cmd_embed->add_option("--data", em_data)->required();
    cmd_embed->add_option("--out", em_out)->required();
    cmd_embed->add_option("--T", em_t);
    cmd_embed->add_option("--seed", em_seed);

    // search
    std::string se_q, se_g, se_out;
    auto* cmd_search = app.add_subcommand("search", "single-query retrieval evaluation");
    cmd_search->add_option("--queries", se_q)->required();
    cmd_search->add_option("--gallery", se_g)->required();
    cmd_search->add_option("--out", se_out)->required();

    // gate-sweep
    std::string gs_q, gs_g, gs_out, gs_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1", gs_report;
    double gs_report_alpha = 0.3;
    auto* cmd_gate = app.add_subcommand("gate-sweep", "risk-controlled threshold sweep");
    cmd_gate->add_option("--queries", gs_q)->required();
    cmd_gate->add_option("--gallery", gs_g)->required();
    cmd_gate->add_option("--alpha-grid", gs_grid);
    cmd_gate->add_option("--out", gs_out)->required();
    cmd_gate->add_option("--gate-report", gs_report);
    cmd_gate->add_option("--report-alpha", gs_report_alpha);

    // multi-query
    std::string mq_q, mq_g, mq_out, mq_fusion;
    double mq_tau_min = 0.5, mq_tau_max = 1.0;
    bool mq_uniform = false;
    auto* cmd_mq = app.add_subcommand("multi-query", "grouped-query retrieval evaluation");
    cmd_mq->add_option("--queries", mq_q)->required();
    cmd_mq->add_option("--gallery", mq_g)->required();
    cmd_mq->add_option("--out", mq_out)->required();
    cmd_mq->add_option("--tau-min", mq_tau_min);
    cmd_mq->add_option("--tau-max", mq_tau_max);
    cmd_mq->add_flag("--uniform", mq_uniform, "uniform weights instead of reliability scores");
    cmd_mq->add_option("--fusion-report", mq_fusion);

    // probe-noise
    std::string pn_model, pn_data, pn_out, pn_etas = "0,0.5,1,2,4";
    std::size_t pn_t = 10;
    std::uint64_t pn_seed = 1;
    auto* cmd_pn = app.add_subcommand("probe-noise", "data uncertainty vs corruption strength");
    cmd_pn->add_option("--model", pn_model)->required();
    cmd_pn->add_option("--data", pn_data)->required();
    cmd_pn->add_option("--etas", pn_etas);
    cmd_pn->add_option("--T", pn_t);
    cmd_pn->add_option("--seed", pn_seed);
    cmd_pn->add_option("--out", pn_out)->required();

    // probe-ood
    std::string po_model, po_datasets, po_out;
    std::size_t po_t = 10;
    std::uint64_t po_seed = 1;
    auto* cmd_po = app.add_subcommand("probe-ood", "model uncertainty across domains");
    cmd_po->add_option("--model", po_model)->required();
    cmd_po->add_option("--datasets", po_datasets)->required();
    cmd_po->add_option("--T", po_t);
    cmd_po->add_option("--seed", po_seed);
    cmd_po->add_option("--out", po_out)->required();

    // probe-model-change
    std::string pm_model, pm_data, pm_out, pm_etas = "0,1,2,4";
    std::size_t pm_iters = 10, pm_samples = 32;
    double pm_lr = 3.5e-4;
    std::uint64_t pm_seed = 1;
    auto* cmd_pm = app.add_subcommand("probe-model-change", "per-sample parameter change probe");
    cmd_pm->add_option("--model", pm_model)->required();
    cmd_pm->add_option("--data", pm_data)->required();
    cmd_pm->add_option("--etas", pm_etas);
    cmd_pm->add_option("--iterations", pm_iters);
    cmd_pm->add_option("--samples", pm_samples);
    cmd_pm->add_option("--lr", pm_lr);
    cmd_pm->add_option("--seed", pm_seed);
    cmd_pm->add_option("--out", pm_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_gen->parsed()) return run_gen_data(gen);

        if (cmd_init->parsed()) {
            echo("init-config", {{"out", cfg_out}});
            ual::write_config(cfg_out, ual::TrainConfig{});
            return 0;
        }

        if (cmd_train->parsed()) {
            ual::TrainConfig cfg;
            if (!tr_config.empty()) cfg = ual::read_config(tr_config);
            if (o_seed->count()) cfg.seed = tr_overrides.seed;
            if (o_rho->count()) cfg.rho = tr_overrides.rho;
            if (o_epochs->count()) cfg.epochs = tr_overrides.epochs;
            if (o_loss->count()) cfg.loss = tr_overrides.loss;
            if (o_cprob->count()) cfg.corrupt_prob = tr_overrides.corrupt_prob;
            if (o_cetas->count()) cfg.corrupt_etas = parse_grid(tr_corrupt_etas);
            std::string etas_echo;
            for (std::size_t i = 0; i < cfg.corrupt_etas.size(); ++i)
                etas_echo += (i ? "," : "") + fd(cfg.corrupt_etas[i]);
            echo("train", {{"data", tr_data},
                           {"out", tr_out},
                           {"seed", std::to_string(cfg.seed)},
                           {"rho", fd(cfg.rho)},
                           {"epochs", std::to_string(cfg.epochs)},
                           {"iterations-per-epoch", std::to_string(cfg.iterations_per_epoch)},
                           {"loss", cfg.loss},
                           {"learning-rate", fd(cfg.learning_rate)},
                           {"corrupt-prob", fd(cfg.corrupt_prob)},
                           {"corrupt-etas", etas_echo}});
            auto dataset = ual::read_dataset(tr_data);
            try {
                auto out = ual::train(dataset, cfg);
                ual::write_checkpoint(tr_out, out.net);
                if (!tr_history.empty()) ual::write_history(tr_history, out.history);
            } catch (const ual::TrainingDiverged& e) {
                ual::write_checkpoint(tr_out, e.last_good);
                std::cerr << "error: " << e.what() << " (last good checkpoint written)\n";
                return 3;
            }
            return 0;
        }

        if (cmd_embed->parsed()) {
            echo("embed", {{"model", em_model},
                           {"data", em_data},
                           {"out", em_out},
                           {"T", std::to_string(em_t)},
                           {"seed", std::to_string(em_seed)}});
            auto net = load_model(em_model);
            auto embeddings = embed_file(net, em_data, em_t, em_seed);
            ual::write_embeddings(em_out, embeddings, em_t);
            return 0;
        }

        if (cmd_search->parsed()) {
            echo("search", {{"queries", se_q}, {"gallery", se_g}, {"out", se_out}});
            auto result = ual::single_query_eval(ual::read_embeddings(se_q), ual::read_embeddings(se_g));
            ual::write_eval_results(se_out, result);
            std::cout << "mAP=" << fd(result.mean_ap) << " rank1=" << fd(result.rank1)
                      << " scored=" << result.scored << " skipped=" << result.skipped << "\n";
            return 0;
        }

        if (cmd_gate->parsed()) {
            echo("gate-sweep", {{"queries", gs_q},
                                {"gallery", gs_g},
                                {"alpha-grid", gs_grid},
                                {"out", gs_out},
                                {"report-alpha", fd(gs_report_alpha)}});
            auto queries = ual::read_embeddings(gs_q);
            auto gallery = ual::read_embeddings(gs_g);
            auto rows = ual::risk_sweep(queries, gallery, parse_grid(gs_grid));
            ual::write_sweep(gs_out, rows);
            if (!gs_report.empty())
                ual::write_gate_report(gs_report, ual::gate(queries, gs_report_alpha));
            return 0;
        }

        if (cmd_mq->parsed()) {
            echo("multi-query", {{"queries", mq_q},
                                 {"gallery", mq_g},
                                 {"out", mq_out},
                                 {"tau-min", fd(mq_tau_min)},
                                 {"tau-max", fd(mq_tau_max)},
                                 {"weights", mq_uniform ? "uniform" : "reliability"}});
            std::vector<ual::FusionGroupReport> report;
            auto result = ual::multi_query_eval(ual::read_embeddings(mq_q), ual::read_embeddings(mq_g),
                                                !mq_uniform, mq_tau_min, mq_tau_max,
                                                mq_fusion.empty() ? nullptr : &report);
            ual::write_eval_results(mq_out, result);
            if (!mq_fusion.empty()) ual::write_fusion_report(mq_fusion, report);
            std::cout << "mAP=" << fd(result.mean_ap) << " rank1=" << fd(result.rank1) << "\n";
            return 0;
        }

        if (cmd_pn->parsed()) {
            echo("probe-noise", {{"model", pn_model},
                                 {"data", pn_data},
                                 {"etas", pn_etas},
                                 {"T", std::to_string(pn_t)},
                                 {"seed", std::to_string(pn_seed)},
                                 {"out", pn_out}});
            auto net = load_model(pn_model);
            auto samples = ual::read_dataset(pn_data);
            auto masks = ual::MaskSet::sample(net, pn_t, pn_seed);
            std::ofstream out(pn_out);
            if (!out) throw std::invalid_argument("cannot open for writing: " + pn_out);
            out << "eta,mean_sigma2_d,p25,p50,p75\n";
            std::mt19937_64 rng(pn_seed + 17);
            for (double eta : parse_grid(pn_etas)) {
                std::vector<ual::LabeledSample> noisy;
                noisy.reserve(samples.size());
                for (const auto& s : samples) noisy.push_back(ual::corrupt(s, eta, rng()));
                auto embeddings = ual::embed(net, noisy, masks);
                std::vector<double> s2d;
                for (const auto& e : embeddings) s2d.push_back(e.data_uncertainty);
                double mean = 0.0;
                for (double v : s2d) mean += v;
                mean /= static_cast<double>(s2d.size());
                out << fd(eta) << ',' << fd(mean) << ',' << fd(quantile(s2d, 0.25)) << ','
                    << fd(quantile(s2d, 0.5)) << ',' << fd(quantile(s2d, 0.75)) << '\n';
            }
            return 0;
        }

        if (cmd_po->parsed()) {
            echo("probe-ood", {{"model", po_model},
                               {"datasets", po_datasets},
                               {"T", std::to_string(po_t)},
                               {"seed", std::to_string(po_seed)},
                               {"out", po_out}});
            auto net = load_model(po_model);
            auto masks = ual::MaskSet::sample(net, po_t, po_seed);
            std::ofstream out(po_out);
            if (!out) throw std::invalid_argument("cannot open for writing: " + po_out);
            out << "dataset,mean_sigma2_m\n";
            std::stringstream ss(po_datasets);
            std::string path;
            while (std::getline(ss, path, ',')) {
                if (path.empty()) continue;
                auto embeddings = ual::embed(net, ual::read_dataset(path), masks);
                double mean = 0.0;
                for (const auto& e : embeddings) mean += e.model_uncertainty;
                mean /= static_cast<double>(embeddings.size());
                out << path << ',' << fd(mean) << '\n';
            }
            return 0;
        }

        if (cmd_pm->parsed()) {
            echo("probe-model-change", {{"model", pm_model},
                                        {"data", pm_data},
                                        {"etas", pm_etas},
                                        {"iterations", std::to_string(pm_iters)},
                                        {"samples", std::to_string(pm_samples)},
                                        {"lr", fd(pm_lr)},
                                        {"seed", std::to_string(pm_seed)},
                                        {"out", pm_out}});
            auto net = load_model(pm_model);
            auto samples = ual::read_dataset(pm_data);
            std::sort(samples.begin(), samples.end(),
                      [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
            // probe clean samples only; corruption is applied here at each eta
            std::erase_if(samples, [](const ual::LabeledSample& s) { return s.eta != 0.0; });
            if (samples.size() > pm_samples) samples.resize(pm_samples);
            std::ofstream out(pm_out);
            if (!out) throw std::invalid_argument("cannot open for writing: " + pm_out);
            out << "eta,mean_model_change\n";
            std::mt19937_64 rng(pm_seed + 31);
            for (double eta : parse_grid(pm_etas)) {
                double mean = 0.0;
                for (const auto& s : samples) {
                    auto noisy = ual::corrupt(s, eta, rng());
                    mean += ual::model_change_probe(net, noisy, pm_iters, pm_lr, rng());
                }
                mean /= static_cast<double>(samples.size());
                out << fd(eta) << ',' << fd(mean) << '\n';
            }
            return 0;
        }
    } catch (const ual::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        const bool numerical = std::strstr(e.what(), "non-finite") != nullptr;
        std::cerr << "error: " << e.what() << "\n";
        return numerical ? 3 : 2;
    }
    return 0;
}
