// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gazeforge/nn/tensor.hpp"

namespace gazeforge::nn {

struct LayerCheckOptions {
    std::size_t trials = 20;
    std::uint64_t seed = 1;
    double step = 1e-5;
    double tolerance = 1e-5;
    std::function<void(const std::string& name, Tensor<double>& grad)> tamper;
};

struct LayerCheckResult {
    std::string kind;
    std::size_t trials = 0;
    double max_rel_error = 0.0;
    bool passed = true;
    std::string worst;  // "<trial>:<tensor>" of the largest error
};

/// Names accepted by check_layer, in suite order.
const std::vector<std::string>& layer_kinds();

/// Randomized verify-64 gradient checks of one layer primitive; inputs are checked
/// alongside weights by binding them as parameters.
LayerCheckResult check_layer(const std::string& kind, const LayerCheckOptions& options);

std::vector<LayerCheckResult> check_all_layers(const LayerCheckOptions& options);

}  // namespace gazeforge::nn
