// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace gazeforge::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;
Isa parse_isa(std::string_view name);

/// True when this binary carries kernels for `isa` and the CPU can run them.
bool isa_supported(Isa isa) noexcept;
std::vector<Isa> supported_isas();

/// Best supported ISA, unless GAZE_FORGE_ISA names another supported one.
Isa detect_isa();

Isa active_isa() noexcept;
/// Switches every subsequent kernels<T>() lookup. Throws UsageError if unsupported.
void set_active_isa(Isa isa);

/// Per-step Adam coefficients, precomputed once per optimizer step.
template <class T>
struct AdamCoefficients {
    T beta1;
    T beta2;
    T step_size;        // lr / (1 - beta1^t)
    T inv_bias2;        // 1 / (1 - beta2^t)
    T eps;
};

/// Flat function table; one instance per (ISA, scalar type).
///
/// gemm computes C = alpha * op(A) * op(B) + beta * C with row-major storage, where
/// op(X) is X or X^T. When beta == 0, C is overwritten without being read.
template <class T>
struct KernelTable {
    Isa isa;
    void (*gemm)(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
                 const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                 std::size_t ldc);
    /// y += alpha * x
    void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
    /// y = x * scale + shift
    void (*scale_shift)(std::size_t n, T scale, T shift, const T* x, T* y);
    /// y = x > 0 ? x : slope * x
    void (*leaky_relu)(std::size_t n, T slope, const T* x, T* y);
    /// dx += x > 0 ? dy : slope * dy
    void (*leaky_relu_backward)(std::size_t n, T slope, const T* x, const T* dy, T* dx);
    T (*sum)(std::size_t n, const T* x);
    T (*dot)(std::size_t n, const T* x, const T* y);
    void (*adam_update)(std::size_t n, const AdamCoefficients<T>& c, T* param, const T* grad, T* m,
                        T* v);
};

template <class T>
const KernelTable<T>& kernels_for(Isa isa);

template <class T>
const KernelTable<T>& kernels() {
    return kernels_for<T>(active_isa());
}

}  // namespace gazeforge::simd
