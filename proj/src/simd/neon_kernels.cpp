// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
//
// AArch64 only; Advanced SIMD is part of the base ISA there.
#include <arm_neon.h>

#include "tables.hpp"
#include "vector_kernels.hpp"

namespace gazeforge::simd::detail {
namespace {

struct NeonF32 {
    using scalar = float;
    using reg = float32x4_t;
    static constexpr std::size_t width = 4;
    static reg load(const float* p) { return vld1q_f32(p); }
    static void store(float* p, reg v) { vst1q_f32(p, v); }
    static reg set1(float v) { return vdupq_n_f32(v); }
    static reg zero() { return vdupq_n_f32(0.0f); }
    static reg add(reg a, reg b) { return vaddq_f32(a, b); }
    static reg mul(reg a, reg b) { return vmulq_f32(a, b); }
    static reg fmadd(reg a, reg b, reg c) { return vfmaq_f32(c, a, b); }
    static reg max(reg a, reg b) { return vmaxq_f32(a, b); }
    static reg min(reg a, reg b) { return vminq_f32(a, b); }
    static reg sqrt(reg a) { return vsqrtq_f32(a); }
    static reg div(reg a, reg b) { return vdivq_f32(a, b); }
    static reg select_positive(reg x, reg a, reg b) {
        return vbslq_f32(vcgtq_f32(x, vdupq_n_f32(0.0f)), a, b);
    }
    static float hsum(reg v) { return vaddvq_f32(v); }
};

struct NeonF64 {
    using scalar = double;
    using reg = float64x2_t;
    static constexpr std::size_t width = 2;
    static reg load(const double* p) { return vld1q_f64(p); }
    static void store(double* p, reg v) { vst1q_f64(p, v); }
    static reg set1(double v) { return vdupq_n_f64(v); }
    static reg zero() { return vdupq_n_f64(0.0); }
    static reg add(reg a, reg b) { return vaddq_f64(a, b); }
    static reg mul(reg a, reg b) { return vmulq_f64(a, b); }
    static reg fmadd(reg a, reg b, reg c) { return vfmaq_f64(c, a, b); }
    static reg max(reg a, reg b) { return vmaxq_f64(a, b); }
    static reg min(reg a, reg b) { return vminq_f64(a, b); }
    static reg sqrt(reg a) { return vsqrtq_f64(a); }
    static reg div(reg a, reg b) { return vdivq_f64(a, b); }
    static reg select_positive(reg x, reg a, reg b) {
        return vbslq_f64(vcgtq_f64(x, vdupq_n_f64(0.0)), a, b);
    }
    static double hsum(reg v) { return vaddvq_f64(v); }
};

}  // namespace

const KernelTable<float>& neon_f32() {
    static const auto table = make_vector_table<NeonF32>(Isa::neon);
    return table;
}

const KernelTable<double>& neon_f64() {
    static const auto table = make_vector_table<NeonF64>(Isa::neon);
    return table;
}

}  // namespace gazeforge::simd::detail
