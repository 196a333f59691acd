// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Layer primitives. Each op comes in two forms: a tensor-level function that only
// computes the forward result, and a graph op (same name, taking a Graph and node
// ids) that records the result together with its backward rule.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gazeforge/core/rng.hpp"
#include "gazeforge/nn/graph.hpp"
#include "gazeforge/nn/tensor.hpp"

namespace gazeforge::nn {

enum class Mode { train, eval };
enum class PoolMode { avg, max };
enum class ActivationKind { relu, leaky_relu };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kLeakySlope = 0.01;

struct Padding2d {
    std::size_t top = 0, bottom = 0, left = 0, right = 0;

    static Padding2d uniform(std::size_t p) { return {p, p, p, p}; }
    friend bool operator==(const Padding2d&, const Padding2d&) = default;
};

struct Window2d {
    std::size_t kernel_h = 1, kernel_w = 1;
    std::size_t stride = 1;
    Padding2d pad;
};

/// floor((in + pad_begin + pad_end - kernel) / stride) + 1. Throws ConfigError naming
/// `what` when the window does not fit.
std::size_t window_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                              std::size_t pad_begin, std::size_t pad_end, const std::string& what);

/// Padding that yields ceil(in / stride) outputs; the odd pixel goes to the end.
Padding2d same_padding(std::size_t in_h, std::size_t in_w, std::size_t kernel, std::size_t stride);

// ---------------------------------------------------------------------------
// Tensor-level forward functions.

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding);
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, Padding2d padding);

template <class T>
Tensor<T> pool2d(const Tensor<T>& input, PoolMode mode, std::size_t size, std::size_t stride = 0,
                 std::size_t padding = 0);

/// Accepts N x C (per-feature statistics) or N x C x H x W. In train mode the
/// running statistics are updated in place.
template <class T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode);

template <class T>
Tensor<T> activation(const Tensor<T>& input, ActivationKind kind, double slope = kLeakySlope);

template <class T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <class T>
Tensor<T> dropout(const Tensor<T>& input, double rate, Rng& rng, Mode mode);

template <class T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& inputs);

template <class T>
Tensor<T> slice_channels(const Tensor<T>& input, std::size_t begin, std::size_t end);

template <class T>
Tensor<T> add_residual(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> flip_horizontal(const Tensor<T>& input);

// ---------------------------------------------------------------------------
// Graph ops. `label` names the layer in diagnostics.

namespace ops {

template <class T>
NodeId conv2d(Graph<T>& g, NodeId x, NodeId weight, NodeId bias, std::size_t stride,
              Padding2d padding, const std::string& label);

template <class T>
NodeId pool2d(Graph<T>& g, NodeId x, PoolMode mode, std::size_t size, std::size_t stride,
              std::size_t padding, const std::string& label);

template <class T>
NodeId batch_norm(Graph<T>& g, NodeId x, NodeId gamma, NodeId beta, Tensor<T>& running_mean,
                  Tensor<T>& running_var, Mode mode, const std::string& label);

template <class T>
NodeId activation(Graph<T>& g, NodeId x, ActivationKind kind, double slope,
                  const std::string& label);

template <class T>
NodeId dense(Graph<T>& g, NodeId x, NodeId weight, NodeId bias, const std::string& label);

/// Identity (returns x) in eval mode or when rate == 0.
template <class T>
NodeId dropout(Graph<T>& g, NodeId x, double rate, Rng& rng, Mode mode, const std::string& label);

/// Concatenation along axis 1 (channels for images, features for N x D).
template <class T>
NodeId concat(Graph<T>& g, const std::vector<NodeId>& xs, const std::string& label);

template <class T>
NodeId add(Graph<T>& g, NodeId a, NodeId b, const std::string& label);

/// N x ... -> N x (product of the rest).
template <class T>
NodeId flatten(Graph<T>& g, NodeId x, const std::string& label);

template <class T>
NodeId flip_horizontal(Graph<T>& g, NodeId x, const std::string& label);

template <class T>
NodeId mse_loss(Graph<T>& g, NodeId pred, NodeId target);

template <class T>
NodeId sum(Graph<T>& g, NodeId x);

/// Scalar sum(weights * x) with constant weights; a generic scalar probe for gradient checks.
template <class T>
NodeId weighted_sum(Graph<T>& g, NodeId x, const Tensor<T>& weights);

}  // namespace ops
}  // namespace gazeforge::nn
