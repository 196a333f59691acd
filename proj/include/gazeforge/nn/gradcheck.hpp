// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gazeforge/nn/graph.hpp"

namespace gazeforge::nn {

/// Builds a scalar loss on a fresh graph. Called once for the analytic gradient and
/// twice per probed entry; it must be a pure function of the parameter values, so any
/// dropout Rng has to be re-seeded inside.
using LossBuilder = std::function<NodeId(Graph<double>&)>;

struct GradcheckOptions {
    double step = 1e-5;
    double tolerance = 1e-5;
    /// 0 probes every entry; otherwise a seeded random subset of this size per tensor.
    std::size_t max_entries_per_tensor = 0;
    std::uint64_t seed = 0;
    /// Entries that miss the tolerance at `step` are re-probed at these steps and keep
    /// the best agreement. A smaller step dodges a nearby ReLU/max-pool kink, a larger
    /// one lifts tiny gradients above round-off; an incorrect gradient fails at all.
    std::vector<double> fallback_steps;
    /// Fault-injection hook applied to each analytic gradient before comparison.
    std::function<void(const std::string& name, Tensor<double>& grad)> tamper;
};

struct GradcheckEntry {
    std::string name;
    std::size_t probed = 0;
    double max_rel_error = 0.0;
    bool passed = true;
    // Worst probed entry.
    std::size_t worst_index = 0;
    std::size_t refined = 0;  // entries that needed a fallback step
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

struct GradcheckReport {
    std::vector<GradcheckEntry> entries;
    double max_rel_error = 0.0;
    bool passed = true;

    std::vector<std::string> failures() const;
};

/// max |g_ad - g_fd| / (|g_ad| + |g_fd| + 1e-12) per parameter, with g_fd from central
/// differences of step `options.step`.
GradcheckReport gradcheck(const LossBuilder& build,
                          const std::vector<std::pair<std::string, Parameter<double>*>>& params,
                          const GradcheckOptions& options);

double relative_error(double analytic, double numeric) noexcept;

}  // namespace gazeforge::nn
