// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/train/optimizer.hpp"

#include <cmath>

#include "gazeforge/simd/kernels.hpp"

namespace gazeforge::train {

Adam::Adam(const model::ModelState<float>& state, AdamConfig cfg) : cfg_(cfg) {
    for (const auto& [name, p] : state.params) {
        m_.emplace(name, nn::Tensor<float>(p.value.shape()));
        v_.emplace(name, nn::Tensor<float>(p.value.shape()));
    }
}

void Adam::step(model::ModelState<float>& state, double lr) {
    if (state.params.size() != m_.size()) throw UsageError("optimizer was built for a different model state");
    for (const auto& [name, p] : state.params) {
        if (!m_.count(name) || p.grad.shape() != m_.at(name).shape())
            throw UsageError("optimizer has no moments matching parameter '" + name + "'");
        if (!p.grad.all_finite()) throw NumericError("non-finite gradient in parameter '" + name + "'");
    }
    ++step_;
    const double t = static_cast<double>(step_);
    simd::AdamCoefficients<float> c{};
    c.beta1 = static_cast<float>(cfg_.beta1);
    c.beta2 = static_cast<float>(cfg_.beta2);
    c.step_size = static_cast<float>(lr / (1.0 - std::pow(cfg_.beta1, t)));
    c.inv_bias2 = static_cast<float>(1.0 / (1.0 - std::pow(cfg_.beta2, t)));
    c.eps = static_cast<float>(cfg_.eps);
    const auto& k = simd::kernels<float>();
    for (auto& [name, p] : state.params) {
        auto& m = m_.at(name);
        auto& v = v_.at(name);
        if (lr == 0.0) {
            // Moments still advance; the parameters stay bit-identical.
            for (std::size_t i = 0; i < p.grad.size(); ++i) {
                const float g = p.grad[i];
                m[i] = c.beta1 * m[i] + (1.0f - c.beta1) * g;
                v[i] = c.beta2 * v[i] + (1.0f - c.beta2) * (g * g);
            }
            continue;
        }
        k.adam_update(p.value.size(), c, p.value.data(), p.grad.data(), m.data(), v.data());
    }
}

double lr_schedule(double base_lr, double gamma, std::size_t epoch) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("lr decay gamma must be in (0, 1]");
    return base_lr * std::pow(gamma, static_cast<double>(epoch));
}

}  // namespace gazeforge::train
