// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace gazeforge {

/// SplitMix64 finalizer. Bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Keyed 64-bit hash of a byte string (FNV-1a absorption followed by two mixing rounds
/// keyed on `key`). Stable across platforms.
constexpr std::uint64_t keyed_hash(std::string_view bytes, std::uint64_t key) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ mix64(key);
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return mix64(h ^ mix64(key + 0x9E3779B97F4A7C15ULL));
}

constexpr std::uint64_t keyed_hash(std::uint64_t a, std::uint64_t b, std::uint64_t key) noexcept {
    return mix64(mix64(a ^ mix64(key)) + 0x9E3779B97F4A7C15ULL * (b + 1));
}

/// Counter-based generator: the i-th draw is mix64(seed + i * golden_gamma), i.e. the
/// SplitMix64 sequence. Any (seed, counter) pair maps to the same value on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept {
        // Multiply-shift; bias is < 2^-64 * n, negligible for the sizes used here.
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller (one value per call, no cached spare).
    double normal() noexcept {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    /// Independent stream derived from this generator's seed and a key.
    Rng fork(std::uint64_t key) const noexcept { return Rng(keyed_hash(seed_, key, 0x5EEDF0CCULL)); }
    Rng fork(std::string_view key) const noexcept { return Rng(keyed_hash(key, seed_)); }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace gazeforge
