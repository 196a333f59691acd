// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace gazeforge {

namespace {
std::atomic<std::size_t> g_limit{0};
}

std::size_t set_worker_limit(std::size_t limit) { return g_limit.exchange(limit); }

std::size_t worker_count() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("GAZE_FORGE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) n = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    const std::size_t cap = g_limit.load();
    return cap > 0 ? std::min(n, cap) : n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gazeforge
