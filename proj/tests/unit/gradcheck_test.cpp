// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "gazeforge/core/rng.hpp"
#include "gazeforge/nn/gradcheck.hpp"
#include "gazeforge/nn/layer_checks.hpp"
#include "gazeforge/nn/ops.hpp"
#include "oracles.hpp"

using namespace gazeforge;
using namespace gazeforge::nn;
using gazeforge::testing::random_tensor;

namespace {

class LayerGradcheck : public ::testing::TestWithParam<std::string> {};

TEST_P(LayerGradcheck, TwentyRandomTrialsWithinTolerance) {
    LayerCheckOptions opts;
    opts.trials = 20;
    opts.seed = 20240611;
    const auto r = check_layer(GetParam(), opts);
    EXPECT_EQ(r.trials, 20u);
    EXPECT_TRUE(r.passed) << r.kind << " worst " << r.worst << " rel " << r.max_rel_error;
    EXPECT_LE(r.max_rel_error, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, LayerGradcheck, ::testing::ValuesIn(layer_kinds()),
                         [](const auto& info) { return info.param; });

TEST(Gradcheck, DenseLayerIsTight) {
    Rng rng(5);
    Parameter<double> x(random_tensor<double>(Shape{3, 6}, rng));
    Parameter<double> w(random_tensor<double>(Shape{6, 4}, rng));
    Parameter<double> b(random_tensor<double>(Shape{4}, rng));
    const auto probe = random_tensor<double>(Shape{3, 4}, rng);
    auto build = [&](Graph<double>& g) {
        return ops::weighted_sum(g, ops::dense(g, g.parameter(x, "x"), g.parameter(w, "w"), g.parameter(b, "b"), "d"),
                                 probe);
    };
    GradcheckOptions opts;
    opts.tolerance = 1e-6;
    EXPECT_TRUE(gradcheck(build, {{"x", &x}, {"w", &w}, {"b", &b}}, opts).passed);
}

TEST(Gradcheck, ConvThreeByThreeOnEightByEightIsTight) {
    Rng rng(6);
    Parameter<double> x(random_tensor<double>(Shape{1, 2, 8, 8}, rng));
    Parameter<double> w(random_tensor<double>(Shape{3, 2, 3, 3}, rng));
    Parameter<double> b(random_tensor<double>(Shape{3}, rng));
    const auto probe = random_tensor<double>(Shape{1, 3, 6, 6}, rng);
    auto build = [&](Graph<double>& g) {
        return ops::weighted_sum(
            g, ops::conv2d(g, g.parameter(x, "x"), g.parameter(w, "w"), g.parameter(b, "b"), 1, Padding2d{}, "c"), probe);
    };
    GradcheckOptions opts;
    opts.tolerance = 1e-6;
    const auto report = gradcheck(build, {{"x", &x}, {"w", &w}, {"b", &b}}, opts);
    EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Gradcheck, TamperedGradientIsReportedByName) {
    LayerCheckOptions opts;
    opts.trials = 2;
    opts.tamper = [](const std::string& name, Tensor<double>& grad) {
        if (name == "weight") grad[0] += 1.0;
    };
    const auto r = check_layer("dense", opts);
    EXPECT_FALSE(r.passed);
    EXPECT_NE(r.worst.find("weight"), std::string::npos);
}

TEST(Gradcheck, UnknownKindIsConfigError) {
    EXPECT_THROW(check_layer("softmax", LayerCheckOptions{}), ConfigError);
}

}  // namespace
