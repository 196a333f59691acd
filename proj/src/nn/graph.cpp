// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/nn/graph.hpp"

#include "gazeforge/simd/kernels.hpp"

namespace gazeforge::nn {

namespace {
template <class T>
std::string describe(const typename Graph<T>::Node& n, NodeId id) {
    return "node " + std::to_string(id) + " (" + n.op + " '" + n.label + "')";
}
}  // namespace

template <class T>
NodeId Graph<T>::constant(Tensor<T> value, std::string label) {
    return record("constant", std::move(label), std::move(value), {}, nullptr);
}

template <class T>
NodeId Graph<T>::parameter(Parameter<T>& param, std::string label) {
    if (!param.value.all_finite()) {
        throw NumericError("parameter '" + label + "' holds a non-finite value");
    }
    Node n;
    n.op = "parameter";
    n.label = std::move(label);
    n.value = param.value;
    n.requires_grad = track_;
    n.param = track_ ? &param : nullptr;
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

template <class T>
NodeId Graph<T>::record(std::string op, std::string label, Tensor<T> value,
                        std::vector<NodeId> inputs, BackwardFn backward) {
    Node n;
    n.op = std::move(op);
    n.label = std::move(label);
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    for (NodeId in : n.inputs) {
        if (in >= nodes_.size()) throw UsageError("graph input id out of range in " + n.op);
        n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    const NodeId id = nodes_.size();
    if (!n.value.all_finite()) {
        throw NumericError("non-finite value in forward pass at " + describe<T>(n, id));
    }
    nodes_.push_back(std::move(n));
    return id;
}

template <class T>
Tensor<T>& Graph<T>::grad(NodeId id) {
    Node& n = nodes_.at(id);
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
}

template <class T>
void Graph<T>::backward(NodeId loss) {
    if (nodes_.at(loss).value.size() != 1) {
        throw UsageError("backward() needs a scalar loss, got shape " +
                         nodes_[loss].value.shape().str());
    }
    for (auto& n : nodes_) n.grad = Tensor<T>();
    grad(loss)[0] = T(1);
    const auto& k = simd::kernels<T>();
    for (NodeId id = loss + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.empty()) continue;
        if (!n.grad.all_finite()) {
            throw NumericError("non-finite gradient in backward pass at " + describe<T>(n, id));
        }
        if (n.param) {
            if (n.param->grad.shape() != n.param->value.shape()) {
                n.param->grad = Tensor<T>(n.param->value.shape());
            }
            k.axpy(n.grad.size(), T(1), n.grad.data(), n.param->grad.data());
        } else if (n.backward) {
            n.backward(*this, id);
        }
    }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace gazeforge::nn
