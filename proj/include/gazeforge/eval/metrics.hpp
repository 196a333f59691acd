// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "gazeforge/nn/tensor.hpp"

namespace gazeforge::eval {

/// Per-row Euclidean distance between N x 2 predictions and targets, in cm.
std::vector<double> euclidean_errors(const nn::Tensor<float>& pred, const nn::Tensor<float>& target);

/// Mean over rows of the Euclidean distance. Throws UsageError on shape mismatch or N = 0.
double mean_euclidean_error(const nn::Tensor<float>& pred, const nn::Tensor<float>& target);

/// Mean over all 2N squared coordinate differences.
double mean_squared_error(const nn::Tensor<float>& pred, const nn::Tensor<float>& target);

struct Metrics {
    double mse = 0.0;
    double mean_error_cm = 0.0;
    std::size_t n = 0;
};

Metrics compute_metrics(const nn::Tensor<float>& pred, const nn::Tensor<float>& target);

/// Frame-weighted pooling of metrics computed on disjoint sets.
Metrics pool(const std::vector<Metrics>& parts);

}  // namespace gazeforge::eval
