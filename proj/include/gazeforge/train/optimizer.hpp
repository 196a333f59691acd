// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "gazeforge/model/state.hpp"

namespace gazeforge::train {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias-corrected moments over every parameter of one ModelState.
class Adam {
public:
    Adam(const model::ModelState<float>& state, AdamConfig cfg = {});

    /// Applies one update from the accumulated gradients. Throws NumericError naming the
    /// first parameter whose gradient holds NaN/Inf; nothing is modified in that case.
    void step(model::ModelState<float>& state, double lr);

    std::uint64_t steps() const noexcept { return step_; }
    const AdamConfig& config() const noexcept { return cfg_; }
    const nn::Tensor<float>& first_moment(const std::string& name) const { return m_.at(name); }
    const nn::Tensor<float>& second_moment(const std::string& name) const { return v_.at(name); }

private:
    AdamConfig cfg_;
    std::uint64_t step_ = 0;
    std::map<std::string, nn::Tensor<float>> m_, v_;
};

/// base_lr * gamma^epoch. Throws ConfigError unless gamma is in (0, 1].
double lr_schedule(double base_lr, double gamma, std::size_t epoch);

}  // namespace gazeforge::train
