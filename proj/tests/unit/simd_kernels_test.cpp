// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Every vector ISA available on this machine must agree with the scalar reference.
#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "gazeforge/core/error.hpp"
#include "gazeforge/core/rng.hpp"
#include "gazeforge/simd/kernels.hpp"

using namespace gazeforge;
using simd::Isa;

namespace {

template <class T>
std::vector<T> random_vec(std::size_t n, Rng& rng) {
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
    return v;
}

template <class T>
T tol();
template <>
float tol<float>() { return 2e-5f; }
template <>
double tol<double>() { return 1e-12; }

std::vector<Isa> vector_isas() {
    std::vector<Isa> out;
    for (Isa isa : simd::supported_isas())
        if (isa != Isa::scalar) out.push_back(isa);
    return out;
}

template <class T>
class KernelEquivalence : public ::testing::Test {};
using ScalarTypes = ::testing::Types<float, double>;
TYPED_TEST_SUITE(KernelEquivalence, ScalarTypes);

TYPED_TEST(KernelEquivalence, GemmAllTransposeCombinationsAndRaggedSizes) {
    using T = TypeParam;
    const auto& ref = simd::kernels_for<T>(Isa::scalar);
    Rng rng(11);
    const std::array<std::array<std::size_t, 3>, 6> dims = {
        {{1, 1, 1}, {5, 7, 3}, {6, 16, 9}, {13, 33, 70}, {64, 300, 49}, {97, 41, 260}}};
    for (Isa isa : vector_isas()) {
        const auto& vec = simd::kernels_for<T>(isa);
        for (auto [m, n, k] : dims) {
            for (int ta = 0; ta < 2; ++ta) {
                for (int tb = 0; tb < 2; ++tb) {
                    const auto a = random_vec<T>(m * k, rng);
                    const auto b = random_vec<T>(k * n, rng);
                    auto c0 = random_vec<T>(m * n, rng);
                    auto c1 = c0;
                    const std::size_t lda = ta ? m : k;
                    const std::size_t ldb = tb ? k : n;
                    for (T beta : {T(0), T(1), T(0.5)}) {
                        ref.gemm(ta, tb, m, n, k, T(0.75), a.data(), lda, b.data(), ldb, beta, c0.data(), n);
                        vec.gemm(ta, tb, m, n, k, T(0.75), a.data(), lda, b.data(), ldb, beta, c1.data(), n);
                        for (std::size_t i = 0; i < m * n; ++i) {
                            ASSERT_NEAR(c0[i], c1[i], tol<T>() * (1 + std::sqrt(double(k))))
                                << simd::isa_name(isa) << " m=" << m << " n=" << n << " k=" << k << " ta=" << ta
                                << " tb=" << tb;
                        }
                    }
                }
            }
        }
    }
}

TYPED_TEST(KernelEquivalence, GemmBetaZeroIgnoresGarbageInOutput) {
    using T = TypeParam;
    for (Isa isa : simd::supported_isas()) {
        const auto& k = simd::kernels_for<T>(isa);
        std::vector<T> a{1, 2}, b{3, 4};
        std::vector<T> c{std::numeric_limits<T>::quiet_NaN()};
        k.gemm(false, false, 1, 1, 2, T(1), a.data(), 2, b.data(), 1, T(0), c.data(), 1);
        EXPECT_EQ(c[0], T(11)) << simd::isa_name(isa);
    }
}

TYPED_TEST(KernelEquivalence, ElementwiseKernelsMatchReference) {
    using T = TypeParam;
    const auto& ref = simd::kernels_for<T>(Isa::scalar);
    Rng rng(5);
    for (Isa isa : vector_isas()) {
        const auto& vec = simd::kernels_for<T>(isa);
        for (std::size_t n : {0u, 1u, 7u, 8u, 31u, 1000u}) {
            const auto x = random_vec<T>(n, rng);
            const auto dy = random_vec<T>(n, rng);
            auto y0 = random_vec<T>(n, rng);
            auto y1 = y0;

            ref.axpy(n, T(0.3), x.data(), y0.data());
            vec.axpy(n, T(0.3), x.data(), y1.data());
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y0[i], y1[i], tol<T>());

            ref.scale_shift(n, T(1.5), T(-0.25), x.data(), y0.data());
            vec.scale_shift(n, T(1.5), T(-0.25), x.data(), y1.data());
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y0[i], y1[i], tol<T>());

            // Activation kernels use only max/min/mul and are exact.
            ref.leaky_relu(n, T(0.01), x.data(), y0.data());
            vec.leaky_relu(n, T(0.01), x.data(), y1.data());
            for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(y0[i], y1[i]);

            ref.leaky_relu_backward(n, T(0.01), x.data(), dy.data(), y0.data());
            vec.leaky_relu_backward(n, T(0.01), x.data(), dy.data(), y1.data());
            for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(y0[i], y1[i]);

            EXPECT_NEAR(ref.sum(n, x.data()), vec.sum(n, x.data()), tol<T>() * (1 + n / 10.0));
            EXPECT_NEAR(ref.dot(n, x.data(), dy.data()), vec.dot(n, x.data(), dy.data()),
                        tol<T>() * (1 + n / 10.0));
        }
    }
}

TYPED_TEST(KernelEquivalence, AdamUpdateMatchesReference) {
    using T = TypeParam;
    const auto& ref = simd::kernels_for<T>(Isa::scalar);
    Rng rng(9);
    const simd::AdamCoefficients<T> c{T(0.9), T(0.999), T(0.016) / T(1 - 0.9 * 0.9), T(1) / T(1 - 0.999 * 0.999),
                                      T(1e-8)};
    for (Isa isa : vector_isas()) {
        const auto& vec = simd::kernels_for<T>(isa);
        const std::size_t n = 203;
        auto p0 = random_vec<T>(n, rng), m0 = random_vec<T>(n, rng), v0 = random_vec<T>(n, rng);
        for (auto& v : v0) v = std::abs(v);
        const auto g = random_vec<T>(n, rng);
        auto p1 = p0, m1 = m0, v1 = v0;
        ref.adam_update(n, c, p0.data(), g.data(), m0.data(), v0.data());
        vec.adam_update(n, c, p1.data(), g.data(), m1.data(), v1.data());
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(p0[i], p1[i], tol<T>());
            EXPECT_NEAR(m0[i], m1[i], tol<T>());
            EXPECT_NEAR(v0[i], v1[i], tol<T>());
        }
    }
}

TEST(Dispatch, ScalarAlwaysSupportedAndSwitchable) {
    EXPECT_TRUE(simd::isa_supported(Isa::scalar));
    const Isa before = simd::active_isa();
    simd::set_active_isa(Isa::scalar);
    EXPECT_EQ(simd::kernels<float>().isa, Isa::scalar);
    simd::set_active_isa(before);
    EXPECT_EQ(simd::kernels<double>().isa, before);
    EXPECT_THROW(simd::parse_isa("sse9"), UsageError);
}

TEST(Dispatch, DetectsVectorIsaOnCapableHosts) {
#if defined(__x86_64__)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        EXPECT_TRUE(simd::isa_supported(Isa::avx2));
    }
#endif
    SUCCEED() << "active ISA: " << simd::isa_name(simd::active_isa());
}

}  // namespace
