// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gazeforge/core/rng.hpp"

namespace gazeforge::nn {

double relative_error(double analytic, double numeric) noexcept {
    return std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-12);
}

std::vector<std::string> GradcheckReport::failures() const {
    std::vector<std::string> out;
    for (const auto& e : entries)
        if (!e.passed) out.push_back(e.name);
    return out;
}

GradcheckReport gradcheck(const LossBuilder& build,
                          const std::vector<std::pair<std::string, Parameter<double>*>>& params,
                          const GradcheckOptions& options) {
    for (auto& [name, p] : params) {
        p->grad = Tensor<double>(p->value.shape());
    }
    {
        Graph<double> g;
        const NodeId loss = build(g);
        g.backward(loss);
    }

    auto eval = [&] {
        Graph<double> g;
        return g.value(build(g))[0];
    };

    Rng rng(options.seed);
    GradcheckReport report;
    for (auto& [name, p] : params) {
        Tensor<double> analytic = p->grad;
        if (options.tamper) options.tamper(name, analytic);

        std::vector<std::size_t> idx(p->value.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        if (options.max_entries_per_tensor && idx.size() > options.max_entries_per_tensor) {
            for (std::size_t i = 0; i < options.max_entries_per_tensor; ++i) {
                std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
            }
            idx.resize(options.max_entries_per_tensor);
        }

        GradcheckEntry entry;
        entry.name = name;
        entry.probed = idx.size();
        auto central = [&](std::size_t i, double h) {
            const double saved = p->value[i];
            p->value[i] = saved + h;
            const double up = eval();
            p->value[i] = saved - h;
            const double down = eval();
            p->value[i] = saved;
            return (up - down) / (2.0 * h);
        };
        for (std::size_t i : idx) {
            double numeric = central(i, options.step);
            double err = relative_error(analytic[i], numeric);
            if (err > options.tolerance && !options.fallback_steps.empty()) {
                ++entry.refined;
                for (double h : options.fallback_steps) {
                    const double alt = central(i, h);
                    const double alt_err = relative_error(analytic[i], alt);
                    if (alt_err < err) {
                        err = alt_err;
                        numeric = alt;
                    }
                }
            }
            if (err >= entry.max_rel_error) {
                entry.max_rel_error = err;
                entry.worst_index = i;
                entry.worst_analytic = analytic[i];
                entry.worst_numeric = numeric;
            }
        }
        entry.passed = entry.max_rel_error <= options.tolerance;
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.passed = report.passed && entry.passed;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace gazeforge::nn
