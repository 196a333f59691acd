// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels. Plain loops with an obvious evaluation order; every vector
// variant is tested against these.
#include <cmath>
#include <vector>

#include "tables.hpp"

namespace gazeforge::simd::detail {
namespace {

template <class T>
void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
    std::vector<T> row(n);
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(row.begin(), row.end(), T(0));
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = ta ? a[p * lda + i] : a[i * lda + p];
            if (tb) {
                for (std::size_t j = 0; j < n; ++j) row[j] += aip * b[j * ldb + p];
            } else {
                const T* brow = b + p * ldb;
                for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
            }
        }
        T* crow = c + i * ldc;
        if (beta == T(0)) {
            for (std::size_t j = 0; j < n; ++j) crow[j] = alpha * row[j];
        } else {
            for (std::size_t j = 0; j < n; ++j) crow[j] = alpha * row[j] + beta * crow[j];
        }
    }
}

template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void scale_shift(std::size_t n, T scale, T shift, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * scale + shift;
}

template <class T>
void leaky_relu(std::size_t n, T slope, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = std::max(x[i], T(0)) + slope * std::min(x[i], T(0));
    }
}

template <class T>
void leaky_relu_backward(std::size_t n, T slope, const T* x, const T* dy, T* dx) {
    for (std::size_t i = 0; i < n; ++i) dx[i] += x[i] > T(0) ? dy[i] : slope * dy[i];
}

template <class T>
T sum(std::size_t n, const T* x) {
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

template <class T>
T dot(std::size_t n, const T* x, const T* y) {
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

template <class T>
void adam_update(std::size_t n, const AdamCoefficients<T>& c, T* param, const T* grad, T* m, T* v) {
    const T one_minus_b1 = T(1) - c.beta1;
    const T one_minus_b2 = T(1) - c.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        const T g = grad[i];
        m[i] = c.beta1 * m[i] + one_minus_b1 * g;
        v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
        param[i] -= c.step_size * m[i] / (std::sqrt(v[i] * c.inv_bias2) + c.eps);
    }
}

template <class T>
KernelTable<T> make_table() {
    return KernelTable<T>{Isa::scalar,     &gemm<T>, &axpy<T>, &scale_shift<T>, &leaky_relu<T>,
                          &leaky_relu_backward<T>, &sum<T>, &dot<T>, &adam_update<T>};
}

}  // namespace

const KernelTable<float>& scalar_f32() {
    static const auto table = make_table<float>();
    return table;
}

const KernelTable<double>& scalar_f64() {
    static const auto table = make_table<double>();
    return table;
}

}  // namespace gazeforge::simd::detail
