// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gazeforge/data/image.hpp"
#include "gazeforge/data/manifest.hpp"
#include "gazeforge/data/split.hpp"

namespace gazeforge::data {

struct GazeCaptureFilters {
    bool phones_only = true;
    bool portrait_only = true;
    bool require_both_eyes = true;  // false keeps frames with at least one valid eye
};

/// One frame from a subject directory. Eye boxes are in frame pixels.
struct RawFrame {
    std::string subject_id;
    std::string frame_id;
    std::filesystem::path image;
    double gaze_x = 0.0, gaze_y = 0.0;  // cm
    Box right, left;
    bool right_valid = false, left_valid = false;
};

struct RawIndex {
    std::vector<RawFrame> frames;
    std::size_t skipped = 0;
    std::vector<std::string> warnings;
};

/// Reads `<root>/<subject>/{info,screen,dotInfo,frames,appleFace,appleLeftEye,appleRightEye}.json`.
/// Frames with missing or corrupt metadata are skipped with a warning; a missing root
/// throws DataError. Output is sorted by subject then frame.
RawIndex load_gazecapture_metadata(const std::filesystem::path& root, const GazeCaptureFilters& filters);

struct PreprocessOptions {
    std::size_t extent = 128;
    bool jpeg_crops = false;  // write per-eye JPEG files instead of one tensor file per pair
    SplitRatios ratios{};
    std::uint64_t seed = 0;
};

struct PreprocessResult {
    Manifest manifest;
    std::size_t rejected = 0;
    std::vector<std::string> warnings;
};

/// Crops every indexed frame (in parallel), writes crops below `out_dir` and the
/// manifest as `out_dir/manifest.tsv`. Frames whose image fails to decode or whose
/// boxes are degenerate are dropped with a warning. The manifest is merged in
/// (subject, frame) order regardless of worker scheduling.
PreprocessResult preprocess_gazecapture(const RawIndex& index, const std::filesystem::path& out_dir,
                                        const PreprocessOptions& opts);

}  // namespace gazeforge::data
