// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gazeforge/core/digest.hpp"
#include "gazeforge/nn/tensor.hpp"

namespace gazeforge::io {

inline constexpr char kTensorFileMagic[4] = {'G', 'Z', 'E', '1'};
inline constexpr std::uint16_t kTensorFileVersion = 1;

/// Named 32-bit tensors behind a fingerprint:
///   "GZE1" | u16 version | 32-byte fingerprint | u32 count |
///   per entry: u16 name length, name bytes, u8 rank, u32 extents, little-endian f32 data.
struct TensorFile {
    std::uint16_t version = kTensorFileVersion;
    Digest fingerprint{};
    std::vector<std::pair<std::string, nn::Tensor<float>>> entries;

    const nn::Tensor<float>& get(const std::string& name) const;
};

std::string encode_tensor_file(const TensorFile& file);
TensorFile decode_tensor_file(std::string_view bytes, const std::string& origin = "<memory>");

/// Writes to a sibling temp file and renames it into place.
void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path);

/// Atomic replace for arbitrary text/binary payloads.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace gazeforge::io
