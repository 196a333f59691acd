// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gazeforge/core/rng.hpp"
#include "gazeforge/model/state.hpp"
#include "gazeforge/nn/graph.hpp"
#include "gazeforge/nn/ops.hpp"

namespace gazeforge::model {

enum class LayerKind { conv, batch_norm, activation, pool, dropout, dense, flatten };
enum class PadRule { valid, same, fixed };

struct Layer {
    LayerKind kind = LayerKind::conv;
    std::size_t channels = 0;  // conv output channels or dense units
    std::size_t kernel = 0;    // conv kernel or pool window; 0 on a pool = infer from residual target
    std::size_t stride = 1;
    PadRule pad_rule = PadRule::valid;
    std::size_t pad = 0;
    nn::PoolMode pool_mode = nn::PoolMode::avg;
    nn::ActivationKind activation = nn::ActivationKind::relu;
    double slope = 0.0;
    double rate = 0.0;

    // Filled in by resolution.
    nn::Padding2d padding;
    std::size_t in_channels = 0;
};

/// Layer tree. A chain runs children in order, branches concatenate child outputs on
/// the channel axis, a residual adds children[1](x) to children[0](x).
struct Node {
    enum class Type { layer, chain, branches, residual };

    Type type = Type::layer;
    std::string name;
    Layer layer;
    std::vector<Node> children;
};

namespace layers {
Node conv(std::string name, std::size_t channels, std::size_t kernel, std::size_t stride, PadRule rule,
          std::size_t pad = 0);
Node batch_norm(std::string name);
Node leaky_relu(std::string name, double slope);
Node relu(std::string name);
Node pool(std::string name, nn::PoolMode mode, std::size_t size, std::size_t stride = 0, std::size_t pad = 0);
Node inferred_avg_pool(std::string name);
Node dropout(std::string name, double rate);
Node dense(std::string name, std::size_t units);
Node flatten(std::string name);
Node chain(std::string name, std::vector<Node> children);
Node branches(std::string name, std::vector<Node> children);
Node residual(std::string name, Node main, Node shortcut);
}  // namespace layers

enum class Init { he_uniform, zeros, ones };

struct TensorSpec {
    std::string name;
    nn::Shape shape;
    Init init = Init::zeros;
    std::size_t fan_in = 0;
};

/// Per-sample extents: {C, H, W} or {D}.
using Extents = std::vector<std::size_t>;

std::string extents_str(const Extents& e);

/// A shape-resolved layer tree plus everything it reads from a ModelState.
struct Network {
    std::string name;
    Node root;
    Extents input;
    Extents output;
    std::vector<TensorSpec> params;
    std::vector<TensorSpec> buffers;
    std::vector<std::pair<std::string, Extents>> trace;  // output extents after each layer

    /// Output extents of the named layer (full dotted path).
    const Extents& extents_after(const std::string& layer) const;
};

/// Resolves padding, inferred pool windows and parameter shapes. Throws ConfigError
/// naming the offending layer when an extent underflows or a residual/branch
/// combination is shape-incompatible.
Network resolve_network(std::string name, Node root, Extents input);

/// Fills every tensor named by `net` into `state`, He-uniform for weights. Each tensor
/// draws from Rng(seed).fork(name), so values do not depend on build order.
template <class T>
void initialize(const Network& net, ModelState<T>& state, std::uint64_t seed);

/// Runs the network on a batch node. Dropout draws from `rng` in execution order.
template <class T>
nn::NodeId run_network(const Network& net, ModelState<T>& state, nn::Graph<T>& g, nn::NodeId x, nn::Mode mode,
                       Rng& rng);

}  // namespace gazeforge::model
