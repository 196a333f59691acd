// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gazeforge::svr {

/// Row-major dense matrix of doubles.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
};

/// `per_feature` z-scores each dimension. `shared` centres each dimension and divides
/// all of them by one scale, the RMS of the per-dimension standard deviations, so
/// relative feature scales survive.
enum class Scaling { shared, per_feature };

std::string_view to_string(Scaling s) noexcept;
Scaling parse_scaling(std::string_view s);

/// Per-dimension centring and scaling; zero-variance dimensions keep scale 1.
struct Standardizer {
    std::vector<double> mean, scale;

    static Standardizer fit(const Matrix& x, Scaling scaling = Scaling::per_feature);
    Matrix apply(const Matrix& x) const;
    std::size_t dims() const noexcept { return mean.size(); }
};

enum class Kernel { linear, rbf };

std::string_view to_string(Kernel k) noexcept;
Kernel parse_kernel(std::string_view s);

struct SvrConfig {
    double C = 1.0;
    double epsilon = 0.1;
    Kernel kernel = Kernel::linear;
    double gamma = 0.0;  // rbf width; 0 picks 1 / (D * variance of the standardized features)
    Scaling scaling = Scaling::shared;
    double tolerance = 1e-10;  // relative duality gap
    std::size_t max_iterations = 200000;  // outer sweeps (linear) or pair updates (rbf)

    void validate() const;
};

/// The dual problem both solvers minimize, in difference variables b_i = a_i - a_i*:
///   f(b) = 1/2 b'Qb + eps * sum|b_i| - t'b,  -C <= b_i <= C
/// Linear: Q = XX' + 1 (bias folded in as a constant feature), t = targets - mean(targets).
/// RBF: Q = K with the extra constraint sum b_i = 0 and an unregularized bias.
struct DualProblem {
    Matrix Q;
    std::vector<double> t;
    double C = 1.0, epsilon = 0.1;
    bool equality = false;

    double objective(const std::vector<double>& b) const;
};

struct SvrModel {
    Kernel kernel = Kernel::linear;
    double C = 1.0, epsilon = 0.1, gamma = 0.0;
    Standardizer standardizer;
    std::vector<double> w;  // linear
    double bias = 0.0;
    Matrix support;         // rbf: standardized support vectors
    std::vector<double> coef;  // rbf: dual coefficients of the support vectors
    // Solver diagnostics.
    std::vector<double> dual;  // full dual vector over training rows
    double dual_objective = 0.0;
    double duality_gap = 0.0;
    std::size_t iterations = 0;
    std::vector<double> objective_trace;  // f(b) after each outer iteration

    std::size_t dims() const noexcept { return standardizer.dims(); }
};

/// Builds the dual problem fit_svr solves for standardized features `z`.
DualProblem make_dual_problem(const Matrix& z, const std::vector<double>& targets, const SvrConfig& cfg, double gamma);

/// Fits epsilon-SVR. Throws UsageError when fewer than 2 rows are given (callers should
/// fall back to uncalibrated predictions) or on shape mismatch.
SvrModel fit_svr(const Matrix& x, const std::vector<double>& y, const SvrConfig& cfg = {});

/// Same as fit_svr but with an externally fitted standardizer.
SvrModel fit_svr(const Matrix& x, const std::vector<double>& y, const SvrConfig& cfg, const Standardizer& st);

std::vector<double> predict_svr(const SvrModel& m, const Matrix& x);

struct MultiSvr {
    Standardizer standardizer;
    SvrModel x, y;
};

/// Independent regressors per output column over shared standardized features.
MultiSvr fit_multi(const Matrix& features, const Matrix& targets, const SvrConfig& cfg = {});
Matrix predict_multi(const MultiSvr& m, const Matrix& features);

/// Single-line text form (used inside calibration reports) and its inverse.
std::string serialize(const SvrModel& m);
SvrModel deserialize_svr(std::string_view text);

}  // namespace gazeforge::svr
