// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "ual/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ual {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return f;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep)) out.push_back(field);
    return out;
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::runtime_error("malformed number: '" + s + "'");
    return v;
}

void expect_header(std::istream& in, const std::string& prefix, const std::string& path,
                   std::string& header) {
    if (!std::getline(in, header) || header.rfind(prefix, 0) != 0)
        throw std::runtime_error(path + ": missing '" + prefix + "' header");
}

std::size_t header_field(const std::string& header, const std::string& key) {
    const auto pos = header.find(key + "=");
    if (pos == std::string::npos)
        throw std::runtime_error("header missing field " + key + ": " + header);
    return static_cast<std::size_t>(std::stoul(header.substr(pos + key.size() + 1)));
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_dataset(const std::string& path, const std::vector<LabeledSample>& samples,
                   std::size_t d_in) {
    auto f = open_out(path);
    f << "ual-dataset v1 D_in=" << d_in << "\n";
    for (const auto& s : samples) {
        if (s.input.size() != d_in)
            throw std::invalid_argument("write_dataset: sample " + std::to_string(s.sample_id) +
                                        " has wrong dimension");
        f << s.sample_id << ',' << s.identity << ',' << s.camera << ',' << format_double(s.eta);
        for (double v : s.input) f << ',' << format_double(v);
        f << '\n';
    }
}

std::vector<LabeledSample> read_dataset(const std::string& path) {
    auto f = open_in(path);
    std::string header;
    expect_header(f, "ual-dataset v1", path, header);
    const std::size_t d_in = header_field(header, "D_in");

    std::vector<LabeledSample> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 4 + d_in)
            throw std::runtime_error(path + ": expected " + std::to_string(4 + d_in) +
                                     " fields, got " + std::to_string(fields.size()));
        LabeledSample s;
        s.sample_id = std::stoll(fields[0]);
        s.identity = std::stoi(fields[1]);
        s.camera = std::stoi(fields[2]);
        s.eta = parse_double(fields[3]);
        s.input.reserve(d_in);
        for (std::size_t i = 0; i < d_in; ++i) s.input.push_back(parse_double(fields[4 + i]));
        out.push_back(std::move(s));
    }
    return out;
}

void write_checkpoint(const std::string& path, const Network& net) {
    auto f = open_out(path);
    const auto& c = net.config();
    f << "ual-model v1\n";
    f << "d_in=" << c.d_in << " hidden=" << c.hidden << " h=" << c.grid_h << " w=" << c.grid_w
      << " c=" << c.channels << " num_classes=" << c.num_classes
      << " rho=" << format_double(c.rho) << "\n";
    f << "classes=";
    const auto& ids = net.class_identities();
    for (std::size_t i = 0; i < ids.size(); ++i) f << (i ? "," : "") << ids[i];
    f << "\n";
    for (std::size_t i = 0; i < net.param_count(); ++i) {
        const Tensor& p = net.param(i);
        f << "param " << net.param_name(i) << " " << p.rank();
        for (std::size_t d : p.shape()) f << " " << d;
        f << "\n";
        for (std::size_t j = 0; j < p.size(); ++j) f << (j ? " " : "") << format_double(p[j]);
        f << "\n";
    }
}

Network load_checkpoint(const std::string& path) {
    auto f = open_in(path);
    std::string header;
    expect_header(f, "ual-model v1", path, header);

    std::string dims;
    if (!std::getline(f, dims)) throw std::runtime_error(path + ": missing dims line");
    ModelConfig mc;
    mc.d_in = header_field(dims, "d_in");
    mc.hidden = header_field(dims, "hidden");
    mc.grid_h = header_field(dims, "h");
    mc.grid_w = header_field(dims, "w");
    mc.channels = header_field(dims, "c");
    mc.num_classes = header_field(dims, "num_classes");
    const auto rho_pos = dims.find("rho=");
    if (rho_pos == std::string::npos) throw std::runtime_error(path + ": dims line missing rho");
    mc.rho = parse_double(dims.substr(rho_pos + 4));

    std::string classes_line;
    if (!std::getline(f, classes_line) || classes_line.rfind("classes=", 0) != 0)
        throw std::runtime_error(path + ": missing classes line");
    std::vector<int> ids;
    for (const auto& field : split(classes_line.substr(8), ','))
        if (!field.empty()) ids.push_back(std::stoi(field));

    Network net = Network::init(mc, 0);
    net.set_class_identities(std::move(ids));

    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string tag, name;
        std::size_t rank;
        if (!(is >> tag >> name >> rank) || tag != "param")
            throw std::runtime_error(path + ": malformed parameter block header: " + line);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape)
            if (!(is >> d)) throw std::runtime_error(path + ": malformed shape for " + name);
        Tensor t(shape);
        std::string values_line;
        if (!std::getline(f, values_line))
            throw std::runtime_error(path + ": missing values for " + name);
        std::istringstream vs(values_line);
        for (std::size_t j = 0; j < t.size(); ++j)
            if (!(vs >> t[j])) throw std::runtime_error(path + ": short value list for " + name);
        Tensor& dst = net.param(name);
        if (!dst.same_shape(t))
            throw std::runtime_error(path + ": shape mismatch for " + name);
        dst = std::move(t);
    }
    return net;
}

void write_embeddings(const std::string& path, const std::vector<GaussianEmbedding>& embeddings,
                      std::size_t t_draws) {
    auto f = open_out(path);
    const std::size_t c = embeddings.empty() ? 0 : embeddings.front().mean.size();
    f << "ual-embed v1 c=" << c << " T=" << t_draws << "\n";
    for (const auto& e : embeddings) {
        f << e.sample_id << ',' << e.identity << ',' << e.camera << ','
          << format_double(e.data_uncertainty) << ',' << format_double(e.model_uncertainty);
        for (double v : e.mean) f << ',' << format_double(v);
        f << '\n';
    }
}

std::vector<GaussianEmbedding> read_embeddings(const std::string& path) {
    auto f = open_in(path);
    std::string header;
    expect_header(f, "ual-embed v1", path, header);
    const std::size_t c = header_field(header, "c");

    std::vector<GaussianEmbedding> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 5 + c)
            throw std::runtime_error(path + ": expected " + std::to_string(5 + c) +
                                     " fields, got " + std::to_string(fields.size()));
        GaussianEmbedding e;
        e.sample_id = std::stoll(fields[0]);
        e.identity = std::stoi(fields[1]);
        e.camera = std::stoi(fields[2]);
        e.data_uncertainty = parse_double(fields[3]);
        e.model_uncertainty = parse_double(fields[4]);
        for (std::size_t i = 0; i < c; ++i) e.mean.push_back(parse_double(fields[5 + i]));
        out.push_back(std::move(e));
    }
    return out;
}

void write_config(const std::string& path, const TrainConfig& c) {
    auto f = open_out(path);
    f << "epochs = " << c.epochs << "\n";
    f << "iterations_per_epoch = " << c.iterations_per_epoch << "\n";
    f << "batch_p = " << c.batch_p << "\n";
    f << "batch_k = " << c.batch_k << "\n";
    f << "learning_rate = " << format_double(c.learning_rate) << "\n";
    f << "decay_epochs = ";
    for (std::size_t i = 0; i < c.decay_epochs.size(); ++i) f << (i ? "," : "") << c.decay_epochs[i];
    f << "\n";
    f << "decay_factor = " << format_double(c.decay_factor) << "\n";
    f << "beta1 = " << format_double(c.beta1) << "\n";
    f << "beta2 = " << format_double(c.beta2) << "\n";
    f << "adam_eps = " << format_double(c.adam_eps) << "\n";
    f << "weight_decay = " << format_double(c.weight_decay) << "\n";
    f << "seed = " << c.seed << "\n";
    f << "rho = " << format_double(c.rho) << "\n";
    f << "triplet_margin = " << format_double(c.triplet_margin) << "\n";
    f << "corrupt_prob = " << format_double(c.corrupt_prob) << "\n";
    f << "corrupt_etas = ";
    for (std::size_t i = 0; i < c.corrupt_etas.size(); ++i)
        f << (i ? "," : "") << format_double(c.corrupt_etas[i]);
    f << "\n";
    f << "loss = " << c.loss << "\n";
    f << "dnet_lambda = " << format_double(c.dnet_lambda) << "\n";
    f << "dnet_entropy_sigma2 = " << format_double(c.dnet_entropy_sigma2) << "\n";
    f << "hidden = " << c.hidden << "\n";
    f << "grid_h = " << c.grid_h << "\n";
    f << "grid_w = " << c.grid_w << "\n";
    f << "channels = " << c.channels << "\n";
}

TrainConfig read_config(const std::string& path) {
    auto f = open_in(path);
    TrainConfig c;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error(path + ": malformed line: " + line);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "epochs") c.epochs = std::stoul(value);
        else if (key == "iterations_per_epoch") c.iterations_per_epoch = std::stoul(value);
        else if (key == "batch_p") c.batch_p = std::stoul(value);
        else if (key == "batch_k") c.batch_k = std::stoul(value);
        else if (key == "learning_rate") c.learning_rate = parse_double(value);
        else if (key == "decay_epochs") {
            c.decay_epochs.clear();
            for (const auto& v : split(value, ','))
                if (!v.empty()) c.decay_epochs.push_back(std::stoul(v));
        }
        else if (key == "decay_factor") c.decay_factor = parse_double(value);
        else if (key == "beta1") c.beta1 = parse_double(value);
        else if (key == "beta2") c.beta2 = parse_double(value);
        else if (key == "adam_eps") c.adam_eps = parse_double(value);
        else if (key == "weight_decay") c.weight_decay = parse_double(value);
        else if (key == "seed") c.seed = std::stoull(value);
        else if (key == "rho") c.rho = parse_double(value);
        else if (key == "triplet_margin") c.triplet_margin = parse_double(value);
        else if (key == "corrupt_prob") c.corrupt_prob = parse_double(value);
        else if (key == "corrupt_etas") {
            c.corrupt_etas.clear();
            for (const auto& v : split(value, ','))
                if (!v.empty()) c.corrupt_etas.push_back(parse_double(v));
        }
        else if (key == "loss") c.loss = value;
        else if (key == "dnet_lambda") c.dnet_lambda = parse_double(value);
        else if (key == "dnet_entropy_sigma2") c.dnet_entropy_sigma2 = parse_double(value);
        else if (key == "hidden") c.hidden = std::stoul(value);
        else if (key == "grid_h") c.grid_h = std::stoul(value);
        else if (key == "grid_w") c.grid_w = std::stoul(value);
        else if (key == "channels") c.channels = std::stoul(value);
        else throw std::runtime_error(path + ": unknown config key: " + key);
    }
    return c;
}

void write_history(const std::string& path, const std::vector<HistoryRow>& history) {
    auto f = open_out(path);
    f << "iteration,loss_total,loss_data,loss_triplet\n";
    for (const auto& row : history)
        f << row.iteration << ',' << format_double(row.total) << ',' << format_double(row.data_term)
          << ',' << format_double(row.triplet_term) << '\n';
}

void write_gate_report(const std::string& path, const GateResult& result) {
    auto f = open_out(path);
    f << "gate alpha=" << format_double(result.thresholds.alpha)
      << " gamma_d=" << format_double(result.thresholds.gamma_d)
      << " gamma_m=" << format_double(result.thresholds.gamma_m) << "\n";
    for (const auto& e : result.entries)
        f << e.sample_id << ',' << format_double(e.c_d) << ',' << format_double(e.c_m) << ','
          << (e.kept ? 1 : 0) << '\n';
}

void write_sweep(const std::string& path, const std::vector<SweepRow>& rows) {
    auto f = open_out(path);
    f << "alpha,retained,mAP\n";
    for (const auto& r : rows)
        f << format_double(r.alpha) << ',' << r.retained << ',' << format_double(r.mean_ap) << '\n';
}

void write_fusion_report(const std::string& path, const std::vector<FusionGroupReport>& report) {
    auto f = open_out(path);
    f << "identity,camera,n,weights\n";
    for (const auto& g : report) {
        f << g.identity << ',' << g.camera << ',' << g.weights.size();
        for (double w : g.weights) f << ',' << format_double(w);
        f << '\n';
    }
}

void write_eval_results(const std::string& path, const EvalResult& result) {
    auto f = open_out(path);
    f << "mAP," << format_double(result.mean_ap) << "\n";
    f << "rank1," << format_double(result.rank1) << "\n";
    f << "scored," << result.scored << "\n";
    f << "skipped," << result.skipped << "\n";
}

}  // namespace ual
