// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace gazeforge {

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256 of a byte string.
Digest sha256(std::string_view bytes);

std::string to_hex(const Digest& digest);
Digest digest_from_hex(std::string_view hex);

}  // namespace gazeforge
