// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "gazeforge/simd/kernels.hpp"

namespace gazeforge::simd::detail {

const KernelTable<float>& scalar_f32();
const KernelTable<double>& scalar_f64();
#if defined(GAZEFORGE_HAVE_AVX2)
const KernelTable<float>& avx2_f32();
const KernelTable<double>& avx2_f64();
#endif
#if defined(GAZEFORGE_HAVE_NEON)
const KernelTable<float>& neon_f32();
const KernelTable<double>& neon_f64();
#endif

}  // namespace gazeforge::simd::detail
