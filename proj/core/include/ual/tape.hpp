// Copyright 2026 The UAL Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <functional>
#include <vector>

#include "ual/tensor.hpp"

namespace ual {

using NodeId = std::size_t;

/// Reverse-mode gradient tape over Tensor values.
///
/// Nodes only ever reference earlier nodes, so creation order is a
/// topological order and backward() is a single reverse sweep that
/// visits each node exactly once. No broadcasting beyond the explicit
/// scalar-node and row-vector variants; shape mismatches are rejected
/// with both shapes reported. Every public operation checks its result
/// for NaN/Inf and rejects the run if any appears.
class Tape {
public:
    /// Leaf that does not require a gradient.
    NodeId constant(Tensor value);
    /// Leaf that accumulates a gradient during backward().
    NodeId parameter(Tensor value);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    /// Gradient accumulated by the last backward(); zero tensor if the
    /// node was never reached.
    const Tensor& grad(NodeId id) const;
    std::size_t node_count() const { return nodes_.size(); }

    // Element-wise binary ops; operands must have identical shapes.
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId div(NodeId a, NodeId b);  // rejects any zero in the denominator

    // Scalar (double) variants.
    NodeId add_scalar(NodeId a, double s);
    NodeId scale(NodeId a, double s);

    // Broadcast variants: one-element node against a tensor, and a row
    // vector added to every row of a matrix.
    NodeId sub_scalar_node(NodeId a, NodeId s);
    NodeId div_scalar_node(NodeId a, NodeId s);
    NodeId add_rowvec(NodeId matrix, NodeId row);

    // Element-wise unary ops.
    NodeId exp(NodeId a);
    NodeId log(NodeId a);  // rejects non-positive inputs
    NodeId softplus(NodeId a);
    NodeId tanh(NodeId a);
    NodeId sqrt(NodeId a);  // rejects negative inputs
    NodeId relu(NodeId a);

    /// Rank-2 matrix product (r x k) * (k x c) -> (r x c).
    NodeId matmul(NodeId a, NodeId b);

    /// Normalize along the last axis; the norm is guarded by eps=1e-12.
    NodeId l2_normalize(NodeId a);

    NodeId mean_all(NodeId a);
    NodeId sum_all(NodeId a);
    /// Mean over axis 0 of a rank-2 tensor: (r x c) -> (c).
    NodeId mean_rows(NodeId a);
    NodeId max_all(NodeId a);  // subgradient routed to the first maximum

    NodeId reshape(NodeId a, std::vector<std::size_t> shape);
    /// Row i of a rank-2 tensor as a vector.
    NodeId row(NodeId a, std::size_t i);
    /// Single element as a scalar node (flat index).
    NodeId index(NodeId a, std::size_t i);

    /// Convenience: sum(mul(a, b)) for equal-shaped operands.
    NodeId dot(NodeId a, NodeId b);

    /// Accumulate dloss/dnode for every node reachable from `loss`,
    /// which must be a one-element tensor.
    void backward(NodeId loss);

    static constexpr double kNormEps = 1e-12;

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool grad_alloc = false;
        std::function<void(Tape&, NodeId)> backprop;  // null for leaves/constants
    };

    NodeId push(Tensor value, std::function<void(Tape&, NodeId)> backprop, const char* op);
    Tensor& grad_buffer(NodeId id);
    void require_same_shape(NodeId a, NodeId b, const char* op) const;
    void require_rank2(NodeId a, const char* op) const;
    void require_scalar(NodeId a, const char* op) const;

    std::vector<Node> nodes_;
};

}  // namespace ual
