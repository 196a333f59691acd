// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "gazeforge/data/crops.hpp"
#include "gazeforge/data/manifest.hpp"
#include "gazeforge/model/spec.hpp"
#include "gazeforge/nn/tensor.hpp"

namespace gazeforge::data {

enum class Eye : std::uint8_t { right = 0, left = 1 };

/// Fair bit from a keyed hash of the frame identity; 0 selects the right eye.
Eye select_eye_for_frame(std::string_view subject_id, std::string_view frame_id, std::uint64_t seed);

struct BatchPlan {
    std::vector<std::size_t> records;  // indices into the manifest
    std::vector<Eye> eyes;             // one-eye mode only
};

struct BatchOptions {
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    model::EyeMode eye_mode = model::EyeMode::two_eye;
    bool shuffle = true;
    bool redraw_eyes = false;  // re-draw the one-eye choice every epoch
};

/// Frames of `split` usable under the eye mode (both crops for two-eye, at least one
/// for one-eye), shuffled with Rng(seed).fork(epoch) and cut into batches; the last
/// batch may be short. Throws DataError when the split is empty.
std::vector<BatchPlan> make_batches(const Manifest& m, Split split, const BatchOptions& opts, std::size_t epoch);

/// One forward batch. Two-eye: images[0] right, images[1] left. One-eye: images[0] is the
/// selected eye per frame and landmarks hold that eye's 4 values.
struct Batch {
    std::vector<nn::Tensor<float>> images;
    nn::Tensor<float> landmarks;
    nn::Tensor<float> targets;  // N x 2, cm
};

Batch assemble_batch(const Manifest& m, const CropStore& store, const BatchPlan& plan, model::EyeMode mode);

}  // namespace gazeforge::data
