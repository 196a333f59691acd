// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gazeforge/model/network.hpp"
#include "gazeforge/model/spec.hpp"
#include "gazeforge/nn/gradcheck.hpp"
#include "gazeforge/nn/ops.hpp"

namespace gazeforge::model {

struct AssemblyCheckOptions {
    /// Eval mode uses randomized running statistics, so every parameter has a live
    /// gradient even for a single sample. Train mode needs batch >= 2 and skips biases
    /// that feed a batch norm directly (their gradient is identically zero).
    nn::Mode mode = nn::Mode::eval;
    std::size_t batch = 1;
    std::uint64_t seed = 7;
    double step = 1e-5;
    double tolerance = 1e-4;
    std::vector<double> fallback_steps{1e-6, 1e-4};
    /// Entries probed per parameter tensor (0 = all).
    std::size_t entries_per_tensor = 4;
    std::function<void(const std::string& name, nn::Tensor<double>& grad)> tamper;
};

/// End-to-end verify-64 gradient check of one assembly on random images and
/// landmarks; the dropout mask is fixed across evaluations. Loss is MSE against random
/// targets.
nn::GradcheckReport check_assembly(const ModelSpec& spec, const AssemblyCheckOptions& options);

/// Biases of conv/dense layers followed immediately by a batch norm.
std::vector<std::string> biases_before_batch_norm(const Network& net);

}  // namespace gazeforge::model
