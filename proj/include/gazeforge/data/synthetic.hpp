// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gazeforge/data/crops.hpp"
#include "gazeforge/data/manifest.hpp"
#include "gazeforge/data/split.hpp"

namespace gazeforge::data {

/// Portrait phone screen below the camera, in camera-centred cm.
struct ScreenRegion {
    double x_min = -3.15, x_max = 3.15;
    double y_min = -12.2, y_max = -1.0;
    double center_x() const noexcept { return 0.5 * (x_min + x_max); }
    double center_y() const noexcept { return 0.5 * (y_min + y_max); }
};

struct SyntheticConfig {
    std::size_t subjects = 4;
    std::size_t frames_per_subject = 32;
    std::uint64_t seed = 1;
    std::size_t extent = 128;
    double bias_min = 0.0;   // cm, per-subject bias magnitude range
    double bias_max = 0.0;
    double noise = 0.02;     // pixel noise std on the [0, 1] scale
    double landmark_jitter = 0.01;
    // Number of distinct dot positions shared by all subjects; 0 samples every frame freely.
    std::size_t dots = 0;
    std::string subject_prefix = "syn";
    SplitRatios ratios{};
    ScreenRegion screen{};
};

struct SyntheticSubject {
    std::string subject_id;
    double iris_radius = 0.0;  // fraction of the crop extent
    double bias_x = 0.0, bias_y = 0.0;
    std::uint64_t texture_seed = 0;
    ScreenRegion screen{};
};

/// Iris centre of the right-eye render in pixels (x right, y down) for an effective
/// gaze point (label plus subject bias). The left eye is the horizontal mirror.
std::pair<double, double> iris_center_px(const ScreenRegion& screen, std::size_t extent, double gx, double gy);

struct RenderedPair {
    EyePair crops;
    Landmarks landmarks{};
    double iris_x = 0.0, iris_y = 0.0;  // right-eye iris centre, pixels
};

/// Renders one frame pair; `frame_key` salts the noise and landmark jitter.
RenderedPair render_eye_pair(const SyntheticConfig& cfg, const SyntheticSubject& subject, double gx, double gy,
                             std::uint64_t frame_key);

SyntheticSubject make_subject(const SyntheticConfig& cfg, std::size_t index);

struct SyntheticDataset {
    Manifest manifest;
    std::vector<SyntheticSubject> subjects;
    MemoryCropStore store;
    std::vector<std::pair<double, double>> iris_px;  // per record, right eye
};

/// Records are ordered by subject then frame; crop keys are `<subject>/<frame>.gze`.
SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& cfg);

/// Writes crops below `dir` and the manifest as `dir/manifest.tsv`.
void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticDataset& ds);

/// Same files as generate + write, without holding the crops in memory.
Manifest write_synthetic_to_disk(const SyntheticConfig& cfg, const std::filesystem::path& dir);

}  // namespace gazeforge::data
