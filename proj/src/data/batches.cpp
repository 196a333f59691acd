// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/data/batches.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "gazeforge/core/error.hpp"
#include "gazeforge/core/rng.hpp"

namespace gazeforge::data {

Eye select_eye_for_frame(std::string_view subject_id, std::string_view frame_id, std::uint64_t seed) {
    std::string key(subject_id);
    key += '/';
    key += frame_id;
    return (keyed_hash(key, seed ^ 0xE7E5E1EC7ULL) >> 63) ? Eye::left : Eye::right;
}

std::vector<BatchPlan> make_batches(const Manifest& m, Split split, const BatchOptions& opts, std::size_t epoch) {
    if (opts.batch_size == 0) throw ConfigError("batch size must be positive");
    const bool two = opts.eye_mode == model::EyeMode::two_eye;
    std::vector<std::size_t> idx;
    for (std::size_t i : m.indices(split)) {
        const auto& r = m.records[i];
        if (two ? (r.has_right() && r.has_left()) : (r.has_right() || r.has_left())) idx.push_back(i);
    }
    if (idx.empty()) throw DataError(std::string("split '") + std::string(to_string(split)) + "' has no usable frames");
    if (opts.shuffle) {
        Rng rng = Rng(opts.seed).fork(static_cast<std::uint64_t>(epoch));
        for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    }
    const std::uint64_t eye_seed = opts.redraw_eyes ? keyed_hash(opts.seed, epoch, 0xE9) : opts.seed;
    std::vector<BatchPlan> out;
    for (std::size_t s = 0; s < idx.size(); s += opts.batch_size) {
        BatchPlan b;
        b.records.assign(idx.begin() + static_cast<std::ptrdiff_t>(s),
                         idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), s + opts.batch_size)));
        if (!two) {
            for (std::size_t i : b.records) {
                const auto& r = m.records[i];
                Eye e = select_eye_for_frame(r.subject_id, r.frame_id, eye_seed);
                if (e == Eye::right && !r.has_right()) e = Eye::left;
                if (e == Eye::left && !r.has_left()) e = Eye::right;
                b.eyes.push_back(e);
            }
        }
        out.push_back(std::move(b));
    }
    return out;
}

Batch assemble_batch(const Manifest& m, const CropStore& store, const BatchPlan& plan, model::EyeMode mode) {
    const bool two = mode == model::EyeMode::two_eye;
    const std::size_t n = plan.records.size();
    if (!two && plan.eyes.size() != n) throw UsageError("one-eye batch needs an eye choice per frame");
    Batch b;
    b.images.resize(two ? 2 : 1);
    b.landmarks = nn::Tensor<float>(nn::Shape{n, two ? std::size_t{8} : std::size_t{4}});
    b.targets = nn::Tensor<float>(nn::Shape{n, 2});
    std::size_t sample = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const FrameRecord& r = m.records.at(plan.records[k]);
        EyePair pair = store.load(r);
        std::vector<const nn::Tensor<float>*> imgs;
        if (two) {
            imgs = {&pair.right, &pair.left};
            std::copy(r.landmarks.begin(), r.landmarks.end(), b.landmarks.data() + k * 8);
        } else {
            const bool left = plan.eyes[k] == Eye::left;
            imgs = {left ? &pair.left : &pair.right};
            std::copy_n(r.landmarks.begin() + (left ? 4 : 0), 4, b.landmarks.data() + k * 4);
        }
        for (std::size_t e = 0; e < imgs.size(); ++e) {
            const auto& t = *imgs[e];
            if (t.empty()) throw DataError("frame " + r.subject_id + "/" + r.frame_id + " lacks a required crop");
            if (k == 0) {
                sample = t.size();
                b.images[e] = nn::Tensor<float>(nn::Shape{n, t.dim(0), t.dim(1), t.dim(2)});
            } else if (t.size() != sample) {
                throw DataError("frame " + r.subject_id + "/" + r.frame_id + " has a crop of different size");
            }
            std::memcpy(b.images[e].data() + k * sample, t.data(), sample * sizeof(float));
        }
        b.targets[k * 2] = static_cast<float>(r.gaze_x);
        b.targets[k * 2 + 1] = static_cast<float>(r.gaze_y);
    }
    return b;
}

}  // namespace gazeforge::data
