// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gazeforge/data/manifest.hpp"

namespace gazeforge::data {

struct SplitRatios {
    double train = 80.0;
    double val = 8.0;
    double test = 12.0;
};

/// Gaze point rounded to 0.01 cm.
using GazeKey = std::pair<std::int64_t, std::int64_t>;
GazeKey gaze_key(double x_cm, double y_cm) noexcept;

/// Keyed hash of the point mapped to a split with the given probabilities.
Split split_for_key(const GazeKey& key, std::uint64_t seed, const SplitRatios& ratios);

/// `quota`: unique points are ordered by their keyed hash and handed out in that order
/// until each split holds its share of frames. `independent`: each point draws its split
/// from its own hash via split_for_key.
enum class SplitMethod { quota, independent };

/// Assigns every record's split from its gaze point. Throws ConfigError unless the
/// ratios are non-negative and sum to 100.
void split_by_gaze_point(std::vector<FrameRecord>& records, const SplitRatios& ratios, std::uint64_t seed,
                         SplitMethod method = SplitMethod::quota);

/// Gaze keys that occur in more than one split (empty for a valid manifest).
std::vector<GazeKey> keys_spanning_splits(const Manifest& m);

}  // namespace gazeforge::data
