// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string>

#include "gazeforge/core/error.hpp"
#include "tables.hpp"

namespace gazeforge::simd {

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::scalar;
    if (name == "avx2") return Isa::avx2;
    if (name == "neon") return Isa::neon;
    throw UsageError("unknown ISA '" + std::string(name) + "' (expected scalar, avx2 or neon)");
}

bool isa_supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(GAZEFORGE_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::neon:
#if defined(GAZEFORGE_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

std::vector<Isa> supported_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
        if (isa_supported(isa)) out.push_back(isa);
    }
    return out;
}

Isa detect_isa() {
    if (const char* env = std::getenv("GAZE_FORGE_ISA")) {
        const Isa requested = parse_isa(env);
        if (!isa_supported(requested)) {
            throw UsageError("GAZE_FORGE_ISA=" + std::string(env) + " is not supported here");
        }
        return requested;
    }
    if (isa_supported(Isa::avx2)) return Isa::avx2;
    if (isa_supported(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

namespace {
std::atomic<Isa>& active() {
    static std::atomic<Isa> isa{detect_isa()};
    return isa;
}
}  // namespace

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (!isa_supported(isa)) {
        throw UsageError("ISA " + std::string(isa_name(isa)) + " is not supported here");
    }
    active().store(isa, std::memory_order_relaxed);
}

template <>
const KernelTable<float>& kernels_for<float>(Isa isa) {
    switch (isa) {
#if defined(GAZEFORGE_HAVE_AVX2)
        case Isa::avx2: return detail::avx2_f32();
#endif
#if defined(GAZEFORGE_HAVE_NEON)
        case Isa::neon: return detail::neon_f32();
#endif
        default: return detail::scalar_f32();
    }
}

template <>
const KernelTable<double>& kernels_for<double>(Isa isa) {
    switch (isa) {
#if defined(GAZEFORGE_HAVE_AVX2)
        case Isa::avx2: return detail::avx2_f64();
#endif
#if defined(GAZEFORGE_HAVE_NEON)
        case Isa::neon: return detail::neon_f64();
#endif
        default: return detail::scalar_f64();
    }
}

}  // namespace gazeforge::simd
