// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gazeforge/core/digest.hpp"

namespace gazeforge::data {

enum class Split : std::uint8_t { train, val, test };

std::string_view to_string(Split s) noexcept;
Split parse_split(std::string_view s);

/// Landmark layout: right eye top-left x, y, bottom-right x, y, then the left eye.
/// Coordinates are normalized by frame width/height.
using Landmarks = std::array<float, 8>;

struct FrameRecord {
    std::string subject_id;
    std::string frame_id;
    Split split = Split::train;
    double gaze_x = 0.0;  // cm, camera-centred
    double gaze_y = 0.0;
    Landmarks landmarks{};
    // Crop file paths relative to the manifest directory; empty when the eye is absent.
    std::string right_crop;
    std::string left_crop;

    bool has_right() const noexcept { return !right_crop.empty(); }
    bool has_left() const noexcept { return !left_crop.empty(); }

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct Manifest {
    static constexpr std::uint32_t kVersion = 1;

    std::uint32_t version = kVersion;
    Digest fingerprint{};
    std::vector<FrameRecord> records;

    std::array<std::size_t, 3> counts() const;
    std::vector<std::size_t> indices(Split s) const;
    /// Sorted unique subject ids.
    std::vector<std::string> subjects() const;

    /// Recomputes `fingerprint` from the records.
    void seal();

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// SHA-256 over the serialized record lines.
Digest dataset_fingerprint(const std::vector<FrameRecord>& records);

/// Header line, then `subject<TAB>frame<TAB>split<TAB>gx<TAB>gy<TAB>lm0..lm7<TAB>right<TAB>left`
/// per frame; reals in shortest round-trip form, `-` for a missing crop.
std::string format_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text, const std::string& origin = "<memory>");

void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace gazeforge::data
