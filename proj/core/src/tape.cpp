// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "ual/tape.hpp"

#include <algorithm>
#include <cmath>

namespace ual {

namespace {

double softplus_stable(double x) {
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace

NodeId Tape::push(Tensor value, std::function<void(Tape&, NodeId)> backprop, const char* op) {
    if (!value.all_finite())
        throw std::runtime_error(std::string("tape: non-finite values produced by ") + op);
    nodes_.push_back(Node{std::move(value), Tensor(), false, std::move(backprop)});
    return nodes_.size() - 1;
}

Tensor& Tape::grad_buffer(NodeId id) {
    Node& n = nodes_[id];
    if (!n.grad_alloc) {
        n.grad = Tensor(n.value.shape());
        n.grad_alloc = true;
    }
    return n.grad;
}

const Tensor& Tape::grad(NodeId id) const {
    const Node& n = nodes_[id];
    if (!n.grad_alloc) {
        static thread_local Tensor zero;
        zero = Tensor(n.value.shape());
        return zero;
    }
    return n.grad;
}

void Tape::require_same_shape(NodeId a, NodeId b, const char* op) const {
    if (!nodes_[a].value.same_shape(nodes_[b].value))
        throw std::invalid_argument(std::string("tape: ") + op + ": shape mismatch (" +
                                    nodes_[a].value.shape_string() + ") vs (" +
                                    nodes_[b].value.shape_string() + ")");
}

void Tape::require_rank2(NodeId a, const char* op) const {
    if (nodes_[a].value.rank() != 2)
        throw std::invalid_argument(std::string("tape: ") + op + ": expected rank-2 tensor, got (" +
                                    nodes_[a].value.shape_string() + ")");
}

void Tape::require_scalar(NodeId a, const char* op) const {
    if (nodes_[a].value.size() != 1)
        throw std::invalid_argument(std::string("tape: ") + op + ": expected one-element tensor, got (" +
                                    nodes_[a].value.shape_string() + ")");
}

NodeId Tape::constant(Tensor value) { return push(std::move(value), nullptr, "constant"); }

NodeId Tape::parameter(Tensor value) { return push(std::move(value), nullptr, "parameter"); }

NodeId Tape::add(NodeId a, NodeId b) {
    require_same_shape(a, b, "add");
    Tensor out = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
    return push(std::move(out), [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buffer(a);
        Tensor& gb = t.grad_buffer(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    }, "add");
}

NodeId Tape::sub(NodeId a, NodeId b) {
    require_same_shape(a, b, "sub");
    Tensor out = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
    return push(std::move(out), [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buffer(a);
        Tensor& gb = t.grad_buffer(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
    }, "sub");
}

NodeId Tape::mul(NodeId a, NodeId b) {
    require_same_shape(a, b, "mul");
    Tensor out = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
    return push(std::move(out), [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& va = t.nodes_[a].value;
        const Tensor& vb2 = t.nodes_[b].value;
        Tensor& ga = t.grad_buffer(a);
        Tensor& gb = t.grad_buffer(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * vb2[i];
            gb[i] += g[i] * va[i];
        }
    }, "mul");
}

NodeId Tape::div(NodeId a, NodeId b) {
    require_same_shape(a, b, "div");
    const Tensor& vb = nodes_[b].value;
    for (std::size_t i = 0; i < vb.size(); ++i)
        if (vb[i] == 0.0)
            throw std::invalid_argument("tape: div: denominator contains zero at flat index " +
                                        std::to_string(i));
    Tensor out = nodes_[a].value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= vb[i];
    return push(std::move(out), [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& va = t.nodes_[a].value;
        const Tensor& vb2 = t.nodes_[b].value;
        Tensor& ga = t.grad_buffer(a);
        Tensor& gb = t.grad_buffer(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] / vb2[i];
            gb[i] -= g[i] * va[i] / (vb2[i] * vb2[i]);
        }
    }, "div");
}

NodeId Tape::add_scalar(NodeId a, double s) {
    Tensor out = nodes_[a].value;
    for (auto& v : out.values()) v += s;
    return push(std::move(out), [a](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }, "add_scalar");
}

NodeId Tape::scale(NodeId a, double s) {
    Tensor out = nodes_[a].value;
    for (auto& v : out.values()) v *= s;
    return push(std::move(out), [a, s](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
    }, "scale");
}

NodeId Tape::sub_scalar_node(NodeId a, NodeId s) {
    require_scalar(s, "sub_scalar_node");
    const double sv = nodes_[s].value.item();
    Tensor out = nodes_[a].value;
    for (auto& v : out.values()) v -= sv;
    return push(std::move(out), [a, s](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buffer(a);
        Tensor& gs = t.grad_buffer(s);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gs[0] -= g[i];
        }
    }, "sub_scalar_node");
}

NodeId Tape::div_scalar_node(NodeId a, NodeId s) {
    require_scalar(s, "div_scalar_node");
    const double sv = nodes_[s].value.item();
    if (sv == 0.0) throw std::invalid_argument("tape: div_scalar_node: denominator is zero");
    Tensor out = nodes_[a].value;
    for (auto& v : out.values()) v /= sv;
    return push(std::move(out), [a, s](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& va = t.nodes_[a].value;
        const double sv2 = t.nodes_[s].value.item();
        Tensor& ga = t.grad_buffer(a);
        Tensor& gs = t.grad_buffer(s);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] / sv2;
            gs[0] -= g[i] * va[i] / (sv2 * sv2);
        }
    }, "div_scalar_node");
}

NodeId Tape::add_rowvec(NodeId matrix, NodeId rowv) {
    require_rank2(matrix, "add_rowvec");
    const Tensor& m = nodes_[matrix].value;
    const Tensor& r = nodes_[rowv].value;
    const std::size_t rows = m.shape()[0], cols = m.shape()[1];
    if (r.rank() != 1 || r.shape()[0] != cols)
        throw std::invalid_argument("tape: add_rowvec: shape mismatch (" + m.shape_string() +
                                    ") vs (" + r.shape_string() + ")");
    Tensor out = m;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] += r[j];
    return push(std::move(out), [matrix, rowv, rows, cols](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& gm = t.grad_buffer(matrix);
        Tensor& gr = t.grad_buffer(rowv);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                gm[i * cols + j] += g[i * cols + j];
                gr[j] += g[i * cols + j];
            }
    }, "add_rowvec");
}

NodeId Tape::exp(NodeId a) {
    Tensor out = nodes_[a].value;
    for (auto& v : out.values()) v = std::exp(v);
    return push(std::move(out), [a](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }, "exp");
}

NodeId Tape::log(NodeId a) {
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i)
        if (va[i] <= 0.0)
            throw std::invalid_argument("tape: log: non-positive input at flat index " +
                                        std::to_string(i));
    Tensor out = va;
    for (auto& v : out.values()) v = std::log(v);
    return push(std::move(out), [a](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.nodes_[a].value;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
    }, "log");
}

NodeId Tape::softplus(NodeId a) {
    Tensor out = nodes_[a].value;
    for (auto& v : out.values()) v = softplus_stable(v);
    return push(std::move(out), [a](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.nodes_[a].value;
        Tensor& ga = t.grad_buffer(a);
        // d/dx softplus = sigmoid(x)
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (1.0 + std::exp(-x[i]));
    }, "softplus");
}

NodeId Tape::tanh(NodeId a) {
    Tensor out = nodes_[a].value;
    for (auto& v : out.values()) v = std::tanh(v);
    return push(std::move(out), [a](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    }, "tanh");
}

NodeId Tape::sqrt(NodeId a) {
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i)
        if (va[i] < 0.0)
            throw std::invalid_argument("tape: sqrt: negative input at flat index " +
                                        std::to_string(i));
    Tensor out = va;
    for (auto& v : out.values()) v = std::sqrt(v);
    return push(std::move(out), [a](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (y[i] > 0.0) ga[i] += g[i] * 0.5 / y[i];
    }, "sqrt");
}

NodeId Tape::relu(NodeId a) {
    Tensor out = nodes_[a].value;
    for (auto& v : out.values()) v = std::max(v, 0.0);
    return push(std::move(out), [a](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.nodes_[a].value;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x[i] > 0.0) ga[i] += g[i];
    }, "relu");
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    const std::size_t r = va.shape()[0], k = va.shape()[1];
    if (vb.shape()[0] != k)
        throw std::invalid_argument("tape: matmul: shape mismatch (" + va.shape_string() +
                                    ") vs (" + vb.shape_string() + ")");
    const std::size_t c = vb.shape()[1];
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double x = va[i * k + kk];
            for (std::size_t j = 0; j < c; ++j) out[i * c + j] += x * vb[kk * c + j];
        }
    return push(std::move(out), [a, b, r, k, c](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& va2 = t.nodes_[a].value;
        const Tensor& vb2 = t.nodes_[b].value;
        Tensor& ga = t.grad_buffer(a);
        Tensor& gb = t.grad_buffer(b);
        // dA = G * B^T ; dB = A^T * G
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t kk = 0; kk < k; ++kk) {
                double acc = 0.0;
                for (std::size_t j = 0; j < c; ++j) acc += g[i * c + j] * vb2[kk * c + j];
                ga[i * k + kk] += acc;
            }
        for (std::size_t kk = 0; kk < k; ++kk)
            for (std::size_t j = 0; j < c; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < r; ++i) acc += va2[i * k + kk] * g[i * c + j];
                gb[kk * c + j] += acc;
            }
    }, "matmul");
}

NodeId Tape::l2_normalize(NodeId a) {
    const Tensor& va = nodes_[a].value;
    const std::size_t last = va.shape().back();
    const std::size_t rows = va.size() / last;
    Tensor out = va;
    std::vector<double> norms(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < last; ++j) {
            const double v = va[i * last + j];
            sq += v * v;
        }
        norms[i] = std::sqrt(sq);
        const double denom = norms[i] + kNormEps;
        for (std::size_t j = 0; j < last; ++j) out[i * last + j] /= denom;
    }
    return push(std::move(out), [a, last, rows, norms = std::move(norms)](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.nodes_[a].value;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < rows; ++i) {
            const double n = norms[i];
            const double m = n + kNormEps;
            double gdotx = 0.0;
            for (std::size_t j = 0; j < last; ++j) gdotx += g[i * last + j] * x[i * last + j];
            for (std::size_t j = 0; j < last; ++j) {
                double d = g[i * last + j] / m;
                if (n > 0.0) d -= gdotx * x[i * last + j] / (n * m * m);
                ga[i * last + j] += d;
            }
        }
    }, "l2_normalize");
}

NodeId Tape::mean_all(NodeId a) {
    const Tensor& va = nodes_[a].value;
    double s = 0.0;
    for (double v : va.values()) s += v;
    const double inv = 1.0 / static_cast<double>(va.size());
    return push(Tensor::scalar(s * inv), [a, inv](Tape& t, NodeId self) {
        const double g = t.nodes_[self].grad[0];
        Tensor& ga = t.grad_buffer(a);
        for (auto& v : ga.values()) v += g * inv;
    }, "mean_all");
}

NodeId Tape::sum_all(NodeId a) {
    const Tensor& va = nodes_[a].value;
    double s = 0.0;
    for (double v : va.values()) s += v;
    return push(Tensor::scalar(s), [a](Tape& t, NodeId self) {
        const double g = t.nodes_[self].grad[0];
        Tensor& ga = t.grad_buffer(a);
        for (auto& v : ga.values()) v += g;
    }, "sum_all");
}

NodeId Tape::mean_rows(NodeId a) {
    require_rank2(a, "mean_rows");
    const Tensor& va = nodes_[a].value;
    const std::size_t rows = va.shape()[0], cols = va.shape()[1];
    Tensor out({cols});
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[j] += va[i * cols + j];
    const double inv = 1.0 / static_cast<double>(rows);
    for (auto& v : out.values()) v *= inv;
    return push(std::move(out), [a, rows, cols, inv](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += g[j] * inv;
    }, "mean_rows");
}

NodeId Tape::max_all(NodeId a) {
    const Tensor& va = nodes_[a].value;
    std::size_t arg = 0;
    for (std::size_t i = 1; i < va.size(); ++i)
        if (va[i] > va[arg]) arg = i;
    return push(Tensor::scalar(va[arg]), [a, arg](Tape& t, NodeId self) {
        t.grad_buffer(a)[arg] += t.nodes_[self].grad[0];
    }, "max_all");
}

NodeId Tape::reshape(NodeId a, std::vector<std::size_t> shape) {
    Tensor out(std::move(shape), nodes_[a].value.values());
    if (out.size() != nodes_[a].value.size())
        throw std::invalid_argument("tape: reshape: element count mismatch (" +
                                    nodes_[a].value.shape_string() + ") vs (" +
                                    out.shape_string() + ")");
    return push(std::move(out), [a](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }, "reshape");
}

NodeId Tape::row(NodeId a, std::size_t i) {
    require_rank2(a, "row");
    const Tensor& va = nodes_[a].value;
    const std::size_t rows = va.shape()[0], cols = va.shape()[1];
    if (i >= rows)
        throw std::invalid_argument("tape: row: index " + std::to_string(i) + " out of range for (" +
                                    va.shape_string() + ")");
    Tensor out({cols});
    for (std::size_t j = 0; j < cols; ++j) out[j] = va[i * cols + j];
    return push(std::move(out), [a, i, cols](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += g[j];
    }, "row");
}

NodeId Tape::index(NodeId a, std::size_t i) {
    const Tensor& va = nodes_[a].value;
    if (i >= va.size())
        throw std::invalid_argument("tape: index: flat index " + std::to_string(i) +
                                    " out of range for (" + va.shape_string() + ")");
    return push(Tensor::scalar(va[i]), [a, i](Tape& t, NodeId self) {
        t.grad_buffer(a)[i] += t.nodes_[self].grad[0];
    }, "index");
}

NodeId Tape::dot(NodeId a, NodeId b) { return sum_all(mul(a, b)); }

void Tape::backward(NodeId loss) {
    if (nodes_[loss].value.size() != 1)
        throw std::invalid_argument("tape: backward: loss must be a one-element tensor, got (" +
                                    nodes_[loss].value.shape_string() + ")");
    for (auto& n : nodes_) n.grad_alloc = false;
    grad_buffer(loss)[0] = 1.0;
    for (std::size_t i = loss + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad_alloc && n.backprop) n.backprop(*this, i);
    }
}

}  // namespace ual
