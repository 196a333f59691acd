// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/model/checkpoint.hpp"

#include <set>

#include "gazeforge/core/error.hpp"
#include "gazeforge/io/tensor_file.hpp"

namespace gazeforge::model {

void save_checkpoint(const std::filesystem::path& path, const ModelState<float>& state) {
    io::TensorFile file;
    file.fingerprint = state.fingerprint;
    for (const auto& [name, p] : state.params) file.entries.emplace_back(name, p.value);
    for (const auto& [name, b] : state.buffers) file.entries.emplace_back(name, b);
    io::write_tensor_file(path, file);
}

ModelState<float> load_checkpoint(const std::filesystem::path& path, const Assembly& assembly) {
    const io::TensorFile file = io::read_tensor_file(path);
    const Digest expected = assembly.spec.fingerprint();
    if (file.fingerprint != expected) {
        throw ConfigError("checkpoint " + path.string() + " was written for spec " + to_hex(file.fingerprint).substr(0, 16) +
                          "..., not " + to_hex(expected).substr(0, 16) + "... (" + assembly.spec.canonical() + ")");
    }
    ModelState<float> state = init_state<float>(assembly, 0);
    std::set<std::string> seen;
    for (const auto& [name, t] : file.entries) {
        if (!seen.insert(name).second) throw DataError("checkpoint " + path.string() + " repeats tensor '" + name + "'");
        nn::Tensor<float>* slot = nullptr;
        if (auto it = state.params.find(name); it != state.params.end()) {
            slot = &it->second.value;
        } else if (auto jt = state.buffers.find(name); jt != state.buffers.end()) {
            slot = &jt->second;
        } else {
            throw DataError("checkpoint " + path.string() + " holds unknown tensor '" + name + "'");
        }
        if (slot->shape() != t.shape()) {
            throw DataError("checkpoint tensor '" + name + "' has shape " + t.shape().str() + ", expected " +
                            slot->shape().str());
        }
        *slot = t;
    }
    if (seen.size() != state.params.size() + state.buffers.size()) {
        throw DataError("checkpoint " + path.string() + " is missing tensors (" + std::to_string(seen.size()) + " of " +
                        std::to_string(state.params.size() + state.buffers.size()) + ")");
    }
    for (auto& [name, p] : state.params) p.grad = nn::Tensor<float>(p.value.shape());
    return state;
}

}  // namespace gazeforge::model
