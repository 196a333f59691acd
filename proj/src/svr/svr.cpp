// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/svr/svr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "gazeforge/core/error.hpp"

namespace gazeforge::svr {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sq_dist(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

double soft_threshold(double u, double k) { return u > k ? u - k : (u < -k ? u + k : 0.0); }

double hinge_sum(const std::vector<double>& r, double b, double eps) {
    double s = 0.0;
    for (double v : r) s += std::max(0.0, std::abs(v - b) - eps);
    return s;
}

// Bias minimizing the epsilon-insensitive loss of residuals r; the objective is convex
// piecewise linear, so the minimizer set is an interval between breakpoints. Its midpoint
// is returned.
double best_bias(const std::vector<double>& r, double eps) {
    std::vector<double> cand;
    for (double v : r) {
        cand.push_back(v - eps);
        cand.push_back(v + eps);
    }
    double best = std::numeric_limits<double>::infinity();
    for (double c : cand) best = std::min(best, hinge_sum(r, c, eps));
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double c : cand) {
        if (hinge_sum(r, c, eps) <= best + 1e-12 * (1.0 + best)) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    }
    return 0.5 * (lo + hi);
}

double rbf(const double* a, const double* b, std::size_t n, double gamma) { return std::exp(-gamma * sq_dist(a, b, n)); }

void check_inputs(const Matrix& x, const std::vector<double>& y) {
    if (x.rows != y.size()) throw UsageError("feature rows and targets differ in count");
    if (x.rows < 2) throw UsageError("SVR needs at least 2 training rows; use uncalibrated predictions instead");
    if (x.cols == 0) throw UsageError("SVR needs at least one feature");
    for (double v : x.data)
        if (!std::isfinite(v)) throw NumericError("non-finite SVR feature");
    for (double v : y)
        if (!std::isfinite(v)) throw NumericError("non-finite SVR target");
}

double auto_gamma(const Matrix& z) {
    double mean = 0.0, var = 0.0;
    for (double v : z.data) mean += v;
    mean /= static_cast<double>(z.data.size());
    for (double v : z.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(z.data.size());
    return 1.0 / (static_cast<double>(z.cols) * (var > 0.0 ? var : 1.0));
}

// Cyclic dual coordinate descent on the box-constrained problem with Q = X~X~'.
void solve_linear(const Matrix& z, const DualProblem& p, const SvrConfig& cfg, SvrModel& m) {
    const std::size_t M = z.rows, D = z.cols;
    std::vector<double> beta(M, 0.0), w(D + 1, 0.0), qd(M);
    auto xt = [&](std::size_t i, std::size_t k) { return k < D ? z(i, k) : 1.0; };
    for (std::size_t i = 0; i < M; ++i) qd[i] = dot(z.row(i), z.row(i), D) + 1.0;
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        for (std::size_t i = 0; i < M; ++i) {
            double wx = w[D];
            for (std::size_t k = 0; k < D; ++k) wx += w[k] * z(i, k);
            const double g = wx - p.t[i];
            const double v = std::clamp(soft_threshold(beta[i] - g / qd[i], p.epsilon / qd[i]), -p.C, p.C);
            const double d = v - beta[i];
            if (d != 0.0) {
                for (std::size_t k = 0; k <= D; ++k) w[k] += d * xt(i, k);
                beta[i] = v;
            }
        }
        // Rebuild w from beta to keep round-off from accumulating.
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t k = 0; k <= D; ++k) w[k] += beta[i] * xt(i, k);
        const double ww = dot(w.data(), w.data(), D + 1);
        double l1 = 0.0, tb = 0.0, loss = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            l1 += std::abs(beta[i]);
            tb += p.t[i] * beta[i];
            double wx = w[D];
            for (std::size_t k = 0; k < D; ++k) wx += w[k] * z(i, k);
            loss += std::max(0.0, std::abs(p.t[i] - wx) - p.epsilon);
        }
        const double f = 0.5 * ww + p.epsilon * l1 - tb;
        m.objective_trace.push_back(f);
        m.iterations = it + 1;
        m.dual_objective = f;
        m.duality_gap = 0.5 * ww + p.C * loss + f;
        if (m.duality_gap <= cfg.tolerance * (1.0 + std::abs(f))) break;
    }
    m.dual = beta;
    m.w.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(D));
    m.bias = w[D];
}

// Exact minimizer over t of a/2 t^2 + g t + eps(|bi + t| + |bj - t|) on [lo, hi].
double pair_step(double a, double g, double eps, double bi, double bj, double lo, double hi) {
    auto f = [&](double t) { return 0.5 * a * t * t + g * t + eps * (std::abs(bi + t) + std::abs(bj - t)); };
    std::vector<double> pts{lo, hi};
    for (double b : {-bi, bj})
        if (b > lo && b < hi) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    double best_t = lo, best_f = f(lo);
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double mid = 0.5 * (pts[k] + pts[k + 1]);
        const double s1 = bi + mid >= 0.0 ? 1.0 : -1.0, s2 = bj - mid >= 0.0 ? 1.0 : -1.0;
        double cand = pts[k + 1];
        if (a > 1e-15) cand = std::clamp(-(g + eps * (s1 - s2)) / a, pts[k], pts[k + 1]);
        for (double c : {pts[k], cand, pts[k + 1]}) {
            const double v = f(c);
            if (v < best_f) {
                best_f = v;
                best_t = c;
            }
        }
    }
    return best_t;
}

// SMO on the equality-constrained problem: each update moves one pair along e_i - e_j.
void solve_rbf(const DualProblem& p, const SvrConfig& cfg, SvrModel& m) {
    const std::size_t M = p.t.size();
    const double C = p.C, eps = p.epsilon;
    std::vector<double> beta(M, 0.0), G(M);
    for (std::size_t i = 0; i < M; ++i) G[i] = -p.t[i];
    auto objective = [&] {
        double q = 0.0, l1 = 0.0, tb = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            q += beta[i] * (G[i] + p.t[i]);
            l1 += std::abs(beta[i]);
            tb += p.t[i] * beta[i];
        }
        return std::array<double, 2>{0.5 * q + eps * l1 - tb, 0.5 * q};
    };
    auto gap = [&](double f, double half_q, double* bias) {
        std::vector<double> r(M);
        for (std::size_t i = 0; i < M; ++i) r[i] = p.t[i] - (G[i] + p.t[i]);
        const double b = best_bias(r, eps);
        if (bias) *bias = b;
        return half_q + C * hinge_sum(r, b, eps) + f;
    };
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        // Steepest feasible pair: raise beta_i, lower beta_j.
        double best = 0.0;
        std::size_t bi = M, bj = M;
        for (std::size_t i = 0; i < M; ++i) {
            if (beta[i] >= C) continue;
            const double up = G[i] + (beta[i] >= 0.0 ? eps : -eps);
            for (std::size_t j = 0; j < M; ++j) {
                if (j == i || beta[j] <= -C) continue;
                const double down = -G[j] + (beta[j] <= 0.0 ? eps : -eps);
                if (up + down < best) {
                    best = up + down;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi == M || best > -1e-13) break;
        const double a = p.Q(bi, bi) + p.Q(bj, bj) - 2.0 * p.Q(bi, bj);
        const double lo = std::max(-C - beta[bi], beta[bj] - C), hi = std::min(C - beta[bi], beta[bj] + C);
        const double t = pair_step(a, G[bi] - G[bj], eps, beta[bi], beta[bj], lo, hi);
        if (t == 0.0) break;
        beta[bi] += t;
        beta[bj] -= t;
        for (std::size_t k = 0; k < M; ++k) G[k] += t * (p.Q(k, bi) - p.Q(k, bj));
        const auto [f, hq] = objective();
        m.objective_trace.push_back(f);
        m.iterations = it + 1;
        if (gap(f, hq, nullptr) <= cfg.tolerance * (1.0 + std::abs(f))) break;
    }
    const auto [f, hq] = objective();
    m.dual_objective = f;
    m.duality_gap = gap(f, hq, &m.bias);
    m.dual = beta;
}

std::string num(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s;
}

std::vector<double> split_numbers(std::string_view s) {
    std::vector<double> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        const auto tok = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        double v = 0;
        auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) throw DataError("bad number in SVR model: " + std::string(tok));
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& x, Scaling scaling) {
    Standardizer s;
    s.mean.assign(x.cols, 0.0);
    s.scale.assign(x.cols, 1.0);
    if (x.rows == 0) return s;
    double total = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) mu += x(i, j);
        mu /= static_cast<double>(x.rows);
        double var = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) var += (x(i, j) - mu) * (x(i, j) - mu);
        var /= static_cast<double>(x.rows);
        s.mean[j] = mu;
        const double sd = std::sqrt(var);
        s.scale[j] = sd > 1e-12 * (1.0 + std::abs(mu)) ? sd : 1.0;
        total += var;
    }
    if (scaling == Scaling::shared) {
        const double rms = std::sqrt(total / static_cast<double>(x.cols));
        s.scale.assign(x.cols, rms > 0.0 ? rms : 1.0);
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
    if (x.cols != mean.size())
        throw UsageError("feature width " + std::to_string(x.cols) + " does not match standardizer width " +
                         std::to_string(mean.size()));
    Matrix z(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) z(i, j) = (x(i, j) - mean[j]) / scale[j];
    return z;
}

std::string_view to_string(Kernel k) noexcept { return k == Kernel::linear ? "linear" : "rbf"; }

std::string_view to_string(Scaling s) noexcept { return s == Scaling::shared ? "shared" : "per_feature"; }

Scaling parse_scaling(std::string_view s) {
    if (s == "shared") return Scaling::shared;
    if (s == "per_feature") return Scaling::per_feature;
    throw ConfigError("unknown SVR scaling '" + std::string(s) + "' (expected shared, per_feature)");
}

Kernel parse_kernel(std::string_view s) {
    if (s == "linear") return Kernel::linear;
    if (s == "rbf") return Kernel::rbf;
    throw ConfigError("unknown SVR kernel '" + std::string(s) + "' (expected linear, rbf)");
}

void SvrConfig::validate() const {
    if (!(C > 0.0)) throw ConfigError("SVR C must be positive");
    if (!(epsilon >= 0.0)) throw ConfigError("SVR epsilon must be non-negative");
    if (!(gamma >= 0.0)) throw ConfigError("SVR gamma must be non-negative");
    if (!(tolerance > 0.0)) throw ConfigError("SVR tolerance must be positive");
    if (max_iterations == 0) throw ConfigError("SVR max_iterations must be positive");
}

double DualProblem::objective(const std::vector<double>& b) const {
    double f = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        f += 0.5 * b[i] * dot(Q.row(i), b.data(), t.size()) + epsilon * std::abs(b[i]) - t[i] * b[i];
    }
    return f;
}

DualProblem make_dual_problem(const Matrix& z, const std::vector<double>& targets, const SvrConfig& cfg, double gamma) {
    DualProblem p;
    const std::size_t M = z.rows;
    p.C = cfg.C;
    p.epsilon = cfg.epsilon;
    p.Q = Matrix(M, M);
    p.t = targets;
    if (cfg.kernel == Kernel::linear) {
        const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(M);
        for (double& v : p.t) v -= mean;
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < M; ++j) p.Q(i, j) = dot(z.row(i), z.row(j), z.cols) + 1.0;
    } else {
        p.equality = true;
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < M; ++j) p.Q(i, j) = rbf(z.row(i), z.row(j), z.cols, gamma);
    }
    return p;
}

SvrModel fit_svr(const Matrix& x, const std::vector<double>& y, const SvrConfig& cfg) {
    check_inputs(x, y);
    return fit_svr(x, y, cfg, Standardizer::fit(x, cfg.scaling));
}

SvrModel fit_svr(const Matrix& x, const std::vector<double>& y, const SvrConfig& cfg, const Standardizer& st) {
    cfg.validate();
    check_inputs(x, y);
    const Matrix z = st.apply(x);
    SvrModel m;
    m.kernel = cfg.kernel;
    m.C = cfg.C;
    m.epsilon = cfg.epsilon;
    m.standardizer = st;
    m.gamma = cfg.kernel == Kernel::rbf ? (cfg.gamma > 0.0 ? cfg.gamma : auto_gamma(z)) : 0.0;
    const DualProblem p = make_dual_problem(z, y, cfg, m.gamma);
    if (cfg.kernel == Kernel::linear) {
        solve_linear(z, p, cfg, m);
        m.bias += std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    } else {
        solve_rbf(p, cfg, m);
        std::size_t nsv = 0;
        for (double b : m.dual) nsv += b != 0.0;
        m.support = Matrix(nsv, z.cols);
        for (std::size_t i = 0, k = 0; i < z.rows; ++i) {
            if (m.dual[i] == 0.0) continue;
            std::copy(z.row(i), z.row(i) + z.cols, m.support.data.begin() + static_cast<std::ptrdiff_t>(k * z.cols));
            m.coef.push_back(m.dual[i]);
            ++k;
        }
    }
    return m;
}

std::vector<double> predict_svr(const SvrModel& m, const Matrix& x) {
    const Matrix z = m.standardizer.apply(x);
    std::vector<double> out(z.rows, m.bias);
    for (std::size_t i = 0; i < z.rows; ++i) {
        if (m.kernel == Kernel::linear) {
            out[i] += dot(m.w.data(), z.row(i), z.cols);
        } else {
            for (std::size_t s = 0; s < m.support.rows; ++s) out[i] += m.coef[s] * rbf(m.support.row(s), z.row(i), z.cols, m.gamma);
        }
    }
    return out;
}

MultiSvr fit_multi(const Matrix& features, const Matrix& targets, const SvrConfig& cfg) {
    if (targets.cols != 2 || targets.rows != features.rows) throw UsageError("targets must be M x 2 matching the features");
    MultiSvr out;
    std::vector<double> tx(targets.rows), ty(targets.rows);
    for (std::size_t i = 0; i < targets.rows; ++i) {
        tx[i] = targets(i, 0);
        ty[i] = targets(i, 1);
    }
    check_inputs(features, tx);
    out.standardizer = Standardizer::fit(features, cfg.scaling);
    out.x = fit_svr(features, tx, cfg, out.standardizer);
    out.y = fit_svr(features, ty, cfg, out.standardizer);
    return out;
}

Matrix predict_multi(const MultiSvr& m, const Matrix& features) {
    const auto px = predict_svr(m.x, features), py = predict_svr(m.y, features);
    Matrix out(features.rows, 2);
    for (std::size_t i = 0; i < features.rows; ++i) {
        out(i, 0) = px[i];
        out(i, 1) = py[i];
    }
    return out;
}

std::string serialize(const SvrModel& m) {
    std::string s = "kernel=" + std::string(to_string(m.kernel)) + " C=" + num(m.C) + " epsilon=" + num(m.epsilon) +
                    " gamma=" + num(m.gamma) + " bias=" + num(m.bias) + " mean=" + join(m.standardizer.mean) +
                    " scale=" + join(m.standardizer.scale);
    if (m.kernel == Kernel::linear) {
        s += " w=" + join(m.w);
    } else {
        s += " sv=" + std::to_string(m.support.rows) + " support=" + join(m.support.data) + " coef=" + join(m.coef);
    }
    return s;
}

SvrModel deserialize_svr(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find(' ', start);
        if (end == std::string_view::npos) end = text.size();
        const auto tok = text.substr(start, end - start);
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) throw DataError("bad SVR token: " + std::string(tok));
        kv[std::string(tok.substr(0, eq))] = std::string(tok.substr(eq + 1));
        start = end + 1;
    }
    auto get = [&](const char* k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw DataError(std::string("SVR model lacks '") + k + "'");
        return it->second;
    };
    auto scalar = [&](const char* k) {
        const auto v = split_numbers(get(k));
        if (v.size() != 1) throw DataError(std::string("SVR field '") + k + "' is not a scalar");
        return v[0];
    };
    SvrModel m;
    m.kernel = parse_kernel(get("kernel"));
    m.C = scalar("C");
    m.epsilon = scalar("epsilon");
    m.gamma = scalar("gamma");
    m.bias = scalar("bias");
    m.standardizer.mean = split_numbers(get("mean"));
    m.standardizer.scale = split_numbers(get("scale"));
    if (m.standardizer.mean.size() != m.standardizer.scale.size()) throw DataError("SVR standardizer widths differ");
    const std::size_t D = m.standardizer.mean.size();
    if (m.kernel == Kernel::linear) {
        m.w = split_numbers(get("w"));
        if (m.w.size() != D) throw DataError("SVR weight width mismatch");
    } else {
        const auto n = static_cast<std::size_t>(scalar("sv"));
        m.support = Matrix(n, D);
        m.support.data = split_numbers(get("support"));
        m.coef = split_numbers(get("coef"));
        if (m.support.data.size() != n * D || m.coef.size() != n) throw DataError("SVR support vector size mismatch");
    }
    return m;
}

}  // namespace gazeforge::svr
