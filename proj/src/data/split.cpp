// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gazeforge/core/error.hpp"
#include "gazeforge/core/rng.hpp"

namespace gazeforge::data {

GazeKey gaze_key(double x_cm, double y_cm) noexcept {
    return {std::llround(x_cm * 100.0), std::llround(y_cm * 100.0)};
}

Split split_for_key(const GazeKey& key, std::uint64_t seed, const SplitRatios& ratios) {
    const std::uint64_t h =
        keyed_hash(static_cast<std::uint64_t>(key.first), static_cast<std::uint64_t>(key.second), seed);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53 * 100.0;
    if (u < ratios.train) return Split::train;
    if (u < ratios.train + ratios.val) return Split::val;
    return Split::test;
}

void split_by_gaze_point(std::vector<FrameRecord>& records, const SplitRatios& ratios, std::uint64_t seed,
                         SplitMethod method) {
    if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
        std::abs(ratios.train + ratios.val + ratios.test - 100.0) > 1e-9) {
        throw ConfigError("split ratios must be non-negative and sum to 100");
    }
    if (method == SplitMethod::independent) {
        for (auto& r : records) r.split = split_for_key(gaze_key(r.gaze_x, r.gaze_y), seed, ratios);
        return;
    }
    std::map<GazeKey, std::size_t> frames;
    for (const auto& r : records) ++frames[gaze_key(r.gaze_x, r.gaze_y)];
    std::vector<std::pair<std::uint64_t, GazeKey>> order;
    for (const auto& [k, n] : frames)
        order.emplace_back(keyed_hash(static_cast<std::uint64_t>(k.first), static_cast<std::uint64_t>(k.second), seed), k);
    std::sort(order.begin(), order.end());
    std::map<GazeKey, Split> assigned;
    const double total = static_cast<double>(records.size());
    double before = 0.0;
    for (const auto& [h, k] : order) {
        const double n = static_cast<double>(frames[k]);
        // Position of the point's frames, centred, as a percentage of all frames.
        const double mid = (before + 0.5 * n) / total * 100.0;
        assigned[k] = mid < ratios.train ? Split::train : mid < ratios.train + ratios.val ? Split::val : Split::test;
        before += n;
    }
    for (auto& r : records) r.split = assigned.at(gaze_key(r.gaze_x, r.gaze_y));
}

std::vector<GazeKey> keys_spanning_splits(const Manifest& m) {
    std::map<GazeKey, unsigned> seen;
    for (const auto& r : m.records) seen[gaze_key(r.gaze_x, r.gaze_y)] |= 1u << static_cast<unsigned>(r.split);
    std::vector<GazeKey> out;
    for (const auto& [k, mask] : seen)
        if (mask & (mask - 1)) out.push_back(k);
    return out;
}

}  // namespace gazeforge::data
