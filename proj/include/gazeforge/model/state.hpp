// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "gazeforge/core/digest.hpp"
#include "gazeforge/core/error.hpp"
#include "gazeforge/nn/tensor.hpp"

namespace gazeforge::model {

/// Every trainable tensor and running statistic of one assembly, keyed by dotted
/// layer path ("tower.block1.conv1.weight"). Ordered maps keep iteration, and thus
/// serialization and optimizer updates, deterministic.
template <class T>
struct ModelState {
    Digest fingerprint{};
    std::map<std::string, nn::Parameter<T>> params;
    std::map<std::string, nn::Tensor<T>> buffers;

    nn::Parameter<T>& param(const std::string& name) {
        auto it = params.find(name);
        if (it == params.end()) throw UsageError("model state has no parameter '" + name + "'");
        return it->second;
    }
    const nn::Parameter<T>& param(const std::string& name) const {
        return const_cast<ModelState*>(this)->param(name);
    }
    nn::Tensor<T>& buffer(const std::string& name) {
        auto it = buffers.find(name);
        if (it == buffers.end()) throw UsageError("model state has no buffer '" + name + "'");
        return it->second;
    }

    /// Trainable element count; running statistics are excluded.
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& [name, p] : params) n += p.value.size();
        return n;
    }

    void zero_grad() {
        for (auto& [name, p] : params) p.zero_grad();
    }

    template <class U>
    ModelState<U> cast() const {
        ModelState<U> out;
        out.fingerprint = fingerprint;
        for (const auto& [name, p] : params) out.params.emplace(name, nn::Parameter<U>(p.value.template cast<U>()));
        for (const auto& [name, b] : buffers) out.buffers.emplace(name, b.template cast<U>());
        return out;
    }
};

}  // namespace gazeforge::model
