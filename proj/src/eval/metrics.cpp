// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/eval/metrics.hpp"

#include <cmath>

#include "gazeforge/core/error.hpp"

namespace gazeforge::eval {

namespace {

std::size_t rows(const nn::Tensor<float>& pred, const nn::Tensor<float>& target) {
    if (pred.shape() != target.shape() || pred.rank() != 2 || pred.dim(1) != 2)
        throw UsageError("metrics need matching N x 2 tensors, got " + pred.shape().str() + " and " +
                         target.shape().str());
    if (pred.dim(0) == 0) throw UsageError("metrics need at least one row");
    return pred.dim(0);
}

}  // namespace

std::vector<double> euclidean_errors(const nn::Tensor<float>& pred, const nn::Tensor<float>& target) {
    const std::size_t n = rows(pred, target);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(pred[2 * i]) - target[2 * i];
        const double dy = static_cast<double>(pred[2 * i + 1]) - target[2 * i + 1];
        out[i] = std::sqrt(dx * dx + dy * dy);
    }
    return out;
}

double mean_euclidean_error(const nn::Tensor<float>& pred, const nn::Tensor<float>& target) {
    double s = 0.0;
    const auto e = euclidean_errors(pred, target);
    for (double v : e) s += v;
    return s / static_cast<double>(e.size());
}

double mean_squared_error(const nn::Tensor<float>& pred, const nn::Tensor<float>& target) {
    const std::size_t n = rows(pred, target);
    double s = 0.0;
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const double d = static_cast<double>(pred[i]) - target[i];
        s += d * d;
    }
    return s / static_cast<double>(2 * n);
}

Metrics compute_metrics(const nn::Tensor<float>& pred, const nn::Tensor<float>& target) {
    return {mean_squared_error(pred, target), mean_euclidean_error(pred, target), pred.dim(0)};
}

Metrics pool(const std::vector<Metrics>& parts) {
    Metrics out;
    for (const auto& p : parts) {
        out.mse += p.mse * static_cast<double>(p.n);
        out.mean_error_cm += p.mean_error_cm * static_cast<double>(p.n);
        out.n += p.n;
    }
    if (out.n == 0) throw UsageError("cannot pool empty metrics");
    out.mse /= static_cast<double>(out.n);
    out.mean_error_cm /= static_cast<double>(out.n);
    return out;
}

}  // namespace gazeforge::eval
