// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace gazeforge {

/// Worker count: GAZE_FORGE_THREADS if set and positive, else hardware concurrency,
/// capped by set_worker_limit.
std::size_t worker_count();

/// Process-wide cap on worker_count; 0 removes it. Returns the previous cap.
std::size_t set_worker_limit(std::size_t limit);

/// Runs fn(i) for i in [0, n). Each index is executed exactly once; the assignment of
/// indices to threads is static so results written to per-index slots are deterministic.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace gazeforge
