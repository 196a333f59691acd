// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "gazeforge/model/assembly.hpp"
#include "gazeforge/model/state.hpp"

namespace gazeforge::model {

/// Parameters and running statistics as one tensor file, stamped with the state's
/// fingerprint. Written atomically.
void save_checkpoint(const std::filesystem::path& path, const ModelState<float>& state);

/// Rejects files whose fingerprint differs from the assembly's spec, and files whose
/// entry names or shapes differ from what the assembly declares.
ModelState<float> load_checkpoint(const std::filesystem::path& path, const Assembly& assembly);

}  // namespace gazeforge::model
