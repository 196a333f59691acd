// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
//
// ISA-independent bodies of the vector kernels. Each ISA translation unit defines
// a lane-traits type V and instantiates make_vector_table<V>(); only the traits
// contain intrinsics.
//
// Traits contract:
//   scalar, reg, width
//   load/store (unaligned), set1, zero, add, mul, fmadd(a, b, c) = a * b + c,
//   max, min, sqrt, div, select_positive(x, a, b) = x > 0 ? a : b, hsum
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <vector>

#include "gazeforge/simd/kernels.hpp"

namespace gazeforge::simd::detail {

template <class V>
struct VectorGemm {
    using T = typename V::scalar;
    using R = typename V::reg;
    static constexpr std::size_t W = V::width;
    static constexpr std::size_t MR = 6;
    static constexpr std::size_t NR = 2 * W;
    static constexpr std::size_t KC = 256;
    static constexpr std::size_t MC = 16 * MR;
    static constexpr std::size_t NC = 256 * NR / W * W;

    struct Buffers {
        std::vector<T> a;
        std::vector<T> b;
    };

    static Buffers& buffers() {
        thread_local Buffers bufs;
        return bufs;
    }

    // Packs rows [i0, i0+mc) x cols [p0, p0+kc) of op(A) into MR-row panels, zero padded.
    static void pack_a(bool ta, const T* a, std::size_t lda, std::size_t i0, std::size_t mc,
                       std::size_t p0, std::size_t kc, T* out) {
        for (std::size_t ir = 0; ir < mc; ir += MR) {
            const std::size_t rows = std::min(MR, mc - ir);
            for (std::size_t p = 0; p < kc; ++p) {
                for (std::size_t r = 0; r < MR; ++r) {
                    T v = 0;
                    if (r < rows) {
                        const std::size_t i = i0 + ir + r;
                        const std::size_t col = p0 + p;
                        v = ta ? a[col * lda + i] : a[i * lda + col];
                    }
                    *out++ = v;
                }
            }
        }
    }

    // Packs rows [p0, p0+kc) x cols [j0, j0+nc) of op(B) into NR-column panels, zero padded.
    static void pack_b(bool tb, const T* b, std::size_t ldb, std::size_t p0, std::size_t kc,
                       std::size_t j0, std::size_t nc, T* out) {
        for (std::size_t jr = 0; jr < nc; jr += NR) {
            const std::size_t cols = std::min(NR, nc - jr);
            for (std::size_t p = 0; p < kc; ++p) {
                const std::size_t row = p0 + p;
                if (!tb && cols == NR) {
                    std::memcpy(out, b + row * ldb + j0 + jr, NR * sizeof(T));
                    out += NR;
                    continue;
                }
                for (std::size_t c = 0; c < NR; ++c) {
                    T v = 0;
                    if (c < cols) {
                        const std::size_t j = j0 + jr + c;
                        v = tb ? b[j * ldb + row] : b[row * ldb + j];
                    }
                    *out++ = v;
                }
            }
        }
    }

    // C[0:rows, 0:cols] += alpha * Ap * Bp over kc.
    static void micro(std::size_t kc, const T* ap, const T* bp, T alpha, T* c, std::size_t ldc,
                      std::size_t rows, std::size_t cols) {
        R c00 = V::zero(), c01 = V::zero(), c10 = V::zero(), c11 = V::zero();
        R c20 = V::zero(), c21 = V::zero(), c30 = V::zero(), c31 = V::zero();
        R c40 = V::zero(), c41 = V::zero(), c50 = V::zero(), c51 = V::zero();
        for (std::size_t p = 0; p < kc; ++p) {
            const R b0 = V::load(bp);
            const R b1 = V::load(bp + W);
            R a = V::set1(ap[0]);
            c00 = V::fmadd(a, b0, c00);
            c01 = V::fmadd(a, b1, c01);
            a = V::set1(ap[1]);
            c10 = V::fmadd(a, b0, c10);
            c11 = V::fmadd(a, b1, c11);
            a = V::set1(ap[2]);
            c20 = V::fmadd(a, b0, c20);
            c21 = V::fmadd(a, b1, c21);
            a = V::set1(ap[3]);
            c30 = V::fmadd(a, b0, c30);
            c31 = V::fmadd(a, b1, c31);
            a = V::set1(ap[4]);
            c40 = V::fmadd(a, b0, c40);
            c41 = V::fmadd(a, b1, c41);
            a = V::set1(ap[5]);
            c50 = V::fmadd(a, b0, c50);
            c51 = V::fmadd(a, b1, c51);
            ap += MR;
            bp += NR;
        }
        const R acc[MR][2] = {{c00, c01}, {c10, c11}, {c20, c21},
                              {c30, c31}, {c40, c41}, {c50, c51}};
        const R va = V::set1(alpha);
        if (cols == NR) {
            for (std::size_t r = 0; r < rows; ++r) {
                T* crow = c + r * ldc;
                V::store(crow, V::fmadd(va, acc[r][0], V::load(crow)));
                V::store(crow + W, V::fmadd(va, acc[r][1], V::load(crow + W)));
            }
            return;
        }
        alignas(64) T tile[MR * NR];
        for (std::size_t r = 0; r < MR; ++r) {
            V::store(tile + r * NR, acc[r][0]);
            V::store(tile + r * NR + W, acc[r][1]);
        }
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < cols; ++j) c[r * ldc + j] += alpha * tile[r * NR + j];
        }
    }

    static void run(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, T alpha,
                    const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                    std::size_t ldc) {
        for (std::size_t i = 0; i < m; ++i) {
            T* crow = c + i * ldc;
            if (beta == T(0)) {
                std::fill(crow, crow + n, T(0));
            } else if (beta != T(1)) {
                for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
            }
        }
        if (m == 0 || n == 0 || k == 0 || alpha == T(0)) return;

        auto& bufs = buffers();
        for (std::size_t jc = 0; jc < n; jc += NC) {
            const std::size_t nc = std::min(NC, n - jc);
            const std::size_t nc_pad = (nc + NR - 1) / NR * NR;
            for (std::size_t pc = 0; pc < k; pc += KC) {
                const std::size_t kc = std::min(KC, k - pc);
                bufs.b.resize(nc_pad * kc);
                pack_b(tb, b, ldb, pc, kc, jc, nc, bufs.b.data());
                for (std::size_t ic = 0; ic < m; ic += MC) {
                    const std::size_t mc = std::min(MC, m - ic);
                    const std::size_t mc_pad = (mc + MR - 1) / MR * MR;
                    bufs.a.resize(mc_pad * kc);
                    pack_a(ta, a, lda, ic, mc, pc, kc, bufs.a.data());
                    for (std::size_t jr = 0; jr < nc; jr += NR) {
                        const std::size_t cols = std::min(NR, nc - jr);
                        const T* bp = bufs.b.data() + jr * kc;
                        for (std::size_t ir = 0; ir < mc; ir += MR) {
                            const std::size_t rows = std::min(MR, mc - ir);
                            micro(kc, bufs.a.data() + ir * kc, bp, alpha,
                                  c + (ic + ir) * ldc + jc + jr, ldc, rows, cols);
                        }
                    }
                }
            }
        }
    }
};

template <class V>
struct VectorElementwise {
    using T = typename V::scalar;
    using R = typename V::reg;
    static constexpr std::size_t W = V::width;

    static void axpy(std::size_t n, T alpha, const T* x, T* y) {
        const R va = V::set1(alpha);
        std::size_t i = 0;
        for (; i + W <= n; i += W) V::store(y + i, V::fmadd(va, V::load(x + i), V::load(y + i)));
        for (; i < n; ++i) y[i] += alpha * x[i];
    }

    static void scale_shift(std::size_t n, T scale, T shift, const T* x, T* y) {
        const R vs = V::set1(scale);
        const R vb = V::set1(shift);
        std::size_t i = 0;
        for (; i + W <= n; i += W) V::store(y + i, V::fmadd(V::load(x + i), vs, vb));
        for (; i < n; ++i) y[i] = x[i] * scale + shift;
    }

    static void leaky_relu(std::size_t n, T slope, const T* x, T* y) {
        const R vs = V::set1(slope);
        const R z = V::zero();
        std::size_t i = 0;
        for (; i + W <= n; i += W) {
            const R v = V::load(x + i);
            V::store(y + i, V::add(V::max(v, z), V::mul(vs, V::min(v, z))));
        }
        for (; i < n; ++i) y[i] = std::max(x[i], T(0)) + slope * std::min(x[i], T(0));
    }

    static void leaky_relu_backward(std::size_t n, T slope, const T* x, const T* dy, T* dx) {
        const R vs = V::set1(slope);
        std::size_t i = 0;
        for (; i + W <= n; i += W) {
            const R g = V::load(dy + i);
            const R d = V::select_positive(V::load(x + i), g, V::mul(vs, g));
            V::store(dx + i, V::add(V::load(dx + i), d));
        }
        for (; i < n; ++i) dx[i] += x[i] > T(0) ? dy[i] : slope * dy[i];
    }

    static T sum(std::size_t n, const T* x) {
        R a0 = V::zero(), a1 = V::zero();
        std::size_t i = 0;
        for (; i + 2 * W <= n; i += 2 * W) {
            a0 = V::add(a0, V::load(x + i));
            a1 = V::add(a1, V::load(x + i + W));
        }
        T s = V::hsum(V::add(a0, a1));
        for (; i < n; ++i) s += x[i];
        return s;
    }

    static T dot(std::size_t n, const T* x, const T* y) {
        R a0 = V::zero(), a1 = V::zero();
        std::size_t i = 0;
        for (; i + 2 * W <= n; i += 2 * W) {
            a0 = V::fmadd(V::load(x + i), V::load(y + i), a0);
            a1 = V::fmadd(V::load(x + i + W), V::load(y + i + W), a1);
        }
        T s = V::hsum(V::add(a0, a1));
        for (; i < n; ++i) s += x[i] * y[i];
        return s;
    }

    static void adam_update(std::size_t n, const AdamCoefficients<T>& c, T* param, const T* grad,
                            T* m, T* v) {
        const R b1 = V::set1(c.beta1), b2 = V::set1(c.beta2);
        const R nb1 = V::set1(T(1) - c.beta1), nb2 = V::set1(T(1) - c.beta2);
        const R step = V::set1(c.step_size), ib2 = V::set1(c.inv_bias2), eps = V::set1(c.eps);
        std::size_t i = 0;
        for (; i + W <= n; i += W) {
            const R g = V::load(grad + i);
            const R mi = V::add(V::mul(b1, V::load(m + i)), V::mul(nb1, g));
            const R vi = V::add(V::mul(b2, V::load(v + i)), V::mul(nb2, V::mul(g, g)));
            V::store(m + i, mi);
            V::store(v + i, vi);
            const R denom = V::add(V::sqrt(V::mul(vi, ib2)), eps);
            const R upd = V::div(V::mul(step, mi), denom);
            V::store(param + i, V::add(V::load(param + i), V::mul(V::set1(T(-1)), upd)));
        }
        const T one_minus_b1 = T(1) - c.beta1;
        const T one_minus_b2 = T(1) - c.beta2;
        for (; i < n; ++i) {
            const T g = grad[i];
            m[i] = c.beta1 * m[i] + one_minus_b1 * g;
            v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
            param[i] -= c.step_size * m[i] / (std::sqrt(v[i] * c.inv_bias2) + c.eps);
        }
    }
};

template <class V>
KernelTable<typename V::scalar> make_vector_table(Isa isa) {
    using E = VectorElementwise<V>;
    return {isa,
            &VectorGemm<V>::run,
            &E::axpy,
            &E::scale_shift,
            &E::leaky_relu,
            &E::leaky_relu_backward,
            &E::sum,
            &E::dot,
            &E::adam_update};
}

}  // namespace gazeforge::simd::detail
