// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gazeforge/nn/tensor.hpp"

namespace gazeforge::nn {

using NodeId = std::size_t;

/// Reverse-mode tape. Nodes are appended in execution order, so the node list is
/// already topologically sorted and backward() walks it in exact reverse.
///
/// A Graph records one forward pass and is discarded afterwards; it must not be
/// shared between threads.
template <class T>
class Graph {
public:
    using BackwardFn = std::function<void(Graph&, NodeId self)>;

    struct Node {
        std::string op;
        std::string label;
        Tensor<T> value;
        Tensor<T> grad;
        std::vector<NodeId> inputs;
        bool requires_grad = false;
        Parameter<T>* param = nullptr;
        BackwardFn backward;
    };

    Graph() = default;
    /// With tracking off, parameters bind as plain leaves and no backward closures are
    /// kept; used for inference.
    explicit Graph(bool track_gradients) : track_(track_gradients) {}

    bool tracks_gradients() const noexcept { return track_; }

    /// Leaf that never receives a gradient (images, landmarks, targets).
    NodeId constant(Tensor<T> value, std::string label = "input");

    /// Leaf bound to a parameter; backward() accumulates into param.grad. Binding the
    /// same parameter twice (shared towers) sums both contributions.
    NodeId parameter(Parameter<T>& param, std::string label);

    /// Appends an op result. `backward` is dropped when no input requires a gradient.
    /// Throws NumericError if `value` holds NaN/Inf.
    NodeId record(std::string op, std::string label, Tensor<T> value, std::vector<NodeId> inputs,
                  BackwardFn backward);

    const Tensor<T>& value(NodeId id) const { return nodes_.at(id).value; }
    bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }
    const Node& node(NodeId id) const { return nodes_.at(id); }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Gradient slot of a node, zero-initialised on first access.
    Tensor<T>& grad(NodeId id);

    /// Seeds d(loss)/d(loss) = 1 and propagates to every parameter leaf.
    /// Throws UsageError if the loss is not a single element.
    void backward(NodeId loss);

private:
    std::vector<Node> nodes_;
    bool track_ = true;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace gazeforge::nn
