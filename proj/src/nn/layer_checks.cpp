// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/nn/layer_checks.hpp"

#include <algorithm>
#include <memory>

#include "gazeforge/core/error.hpp"
#include "gazeforge/core/rng.hpp"
#include "gazeforge/nn/gradcheck.hpp"
#include "gazeforge/nn/ops.hpp"

namespace gazeforge::nn {

namespace {

using G = Graph<double>;

Tensor<double> uniform_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(shape);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

// One randomized instance: owned parameters plus a builder producing the pre-loss output.
struct Trial {
    std::vector<std::unique_ptr<Parameter<double>>> storage;
    std::vector<std::pair<std::string, Parameter<double>*>> params;
    std::function<NodeId(G&)> forward;

    Parameter<double>* add(const std::string& name, Tensor<double> value) {
        storage.push_back(std::make_unique<Parameter<double>>(std::move(value)));
        params.emplace_back(name, storage.back().get());
        return storage.back().get();
    }
};

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

Trial make_conv(Rng& rng) {
    Trial t;
    const std::size_t n = pick(rng, 1, 2), c = pick(rng, 1, 3), oc = pick(rng, 1, 3);
    const std::size_t k = pick(rng, 1, 4), stride = pick(rng, 1, 2);
    const std::size_t h = pick(rng, k + 1, 8), w = pick(rng, k + 1, 8);
    Padding2d pad;
    switch (rng.below(3)) {
        case 0: break;
        case 1: pad = Padding2d::uniform(rng.below(k)); break;
        default: pad = same_padding(h, w, k, stride); break;
    }
    auto* x = t.add("input", uniform_tensor(Shape{n, c, h, w}, rng));
    auto* wt = t.add("weight", uniform_tensor(Shape{oc, c, k, k}, rng));
    auto* b = t.add("bias", uniform_tensor(Shape{oc}, rng));
    t.forward = [=](G& g) {
        return ops::conv2d(g, g.parameter(*x, "x"), g.parameter(*wt, "w"), g.parameter(*b, "b"), stride, pad, "conv");
    };
    return t;
}

Trial make_pool(Rng& rng, PoolMode mode) {
    Trial t;
    const std::size_t n = pick(rng, 1, 2), c = pick(rng, 1, 3);
    const std::size_t size = pick(rng, 2, 3);
    const std::size_t stride = rng.below(2) ? size : 1;
    const std::size_t pad = rng.below(2) ? size / 2 : 0;
    const std::size_t h = pick(rng, size, 8), w = pick(rng, size, 8);
    auto* x = t.add("input", uniform_tensor(Shape{n, c, h, w}, rng));
    t.forward = [=](G& g) { return ops::pool2d(g, g.parameter(*x, "x"), mode, size, stride, pad, "pool"); };
    return t;
}

Trial make_batch_norm(Rng& rng, bool spatial, Mode mode) {
    Trial t;
    const std::size_t n = pick(rng, 2, 4), c = pick(rng, 1, 3);
    const Shape shape = spatial ? Shape{n, c, pick(rng, 1, 4), pick(rng, 1, 4)} : Shape{n, c};
    auto* x = t.add("input", uniform_tensor(shape, rng));
    auto* gamma = t.add("gamma", uniform_tensor(Shape{c}, rng, 0.5, 1.5));
    auto* beta = t.add("beta", uniform_tensor(Shape{c}, rng));
    auto running_mean = std::make_shared<Tensor<double>>(uniform_tensor(Shape{c}, rng));
    auto running_var = std::make_shared<Tensor<double>>(uniform_tensor(Shape{c}, rng, 0.5, 2.0));
    t.forward = [=](G& g) {
        // Work on copies so repeated evaluations see identical running statistics.
        Tensor<double> rm = *running_mean, rv = *running_var;
        return ops::batch_norm(g, g.parameter(*x, "x"), g.parameter(*gamma, "gamma"), g.parameter(*beta, "beta"), rm,
                               rv, mode, "bn");
    };
    return t;
}

Trial make_activation(Rng& rng, ActivationKind kind) {
    Trial t;
    auto* x = t.add("input", uniform_tensor(Shape{pick(rng, 1, 3), pick(rng, 1, 12)}, rng));
    const double slope = kind == ActivationKind::leaky_relu ? rng.uniform(0.01, 0.3) : 0.0;
    t.forward = [=](G& g) { return ops::activation(g, g.parameter(*x, "x"), kind, slope, "act"); };
    return t;
}

Trial make_dense(Rng& rng) {
    Trial t;
    const std::size_t n = pick(rng, 1, 4), d = pick(rng, 1, 10), u = pick(rng, 1, 6);
    auto* x = t.add("input", uniform_tensor(Shape{n, d}, rng));
    auto* w = t.add("weight", uniform_tensor(Shape{d, u}, rng));
    auto* b = t.add("bias", uniform_tensor(Shape{u}, rng));
    t.forward = [=](G& g) { return ops::dense(g, g.parameter(*x, "x"), g.parameter(*w, "w"), g.parameter(*b, "b"), "dense"); };
    return t;
}

Trial make_dropout(Rng& rng) {
    Trial t;
    auto* x = t.add("input", uniform_tensor(Shape{pick(rng, 1, 3), pick(rng, 4, 16)}, rng));
    const double rate = rng.uniform(0.1, 0.6);
    const std::uint64_t seed = rng.next_u64();
    t.forward = [=](G& g) {
        Rng mask(seed);
        return ops::dropout(g, g.parameter(*x, "x"), rate, mask, Mode::train, "dropout");
    };
    return t;
}

Trial make_concat(Rng& rng) {
    Trial t;
    const std::size_t n = pick(rng, 1, 2), h = pick(rng, 1, 4), w = pick(rng, 1, 4);
    const std::size_t parts = pick(rng, 2, 4);
    std::vector<Parameter<double>*> xs;
    for (std::size_t i = 0; i < parts; ++i)
        xs.push_back(t.add("input" + std::to_string(i), uniform_tensor(Shape{n, pick(rng, 1, 3), h, w}, rng)));
    t.forward = [=](G& g) {
        std::vector<NodeId> ids;
        for (auto* p : xs) ids.push_back(g.parameter(*p, "x"));
        return ops::concat(g, ids, "concat");
    };
    return t;
}

Trial make_add(Rng& rng) {
    Trial t;
    const Shape shape{pick(rng, 1, 2), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)};
    auto* a = t.add("lhs", uniform_tensor(shape, rng));
    auto* b = t.add("rhs", uniform_tensor(shape, rng));
    t.forward = [=](G& g) { return ops::add(g, g.parameter(*a, "a"), g.parameter(*b, "b"), "add"); };
    return t;
}

Trial make_flatten_flip(Rng& rng) {
    Trial t;
    auto* x = t.add("input", uniform_tensor(Shape{pick(rng, 1, 2), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 2, 5)}, rng));
    t.forward = [=](G& g) { return ops::flatten(g, ops::flip_horizontal(g, g.parameter(*x, "x"), "flip"), "flatten"); };
    return t;
}

Trial make_mse(Rng& rng) {
    Trial t;
    const Shape shape{pick(rng, 1, 8), 2};
    auto* p = t.add("pred", uniform_tensor(shape, rng));
    auto target = uniform_tensor(shape, rng);
    t.forward = [=](G& g) { return ops::mse_loss(g, g.parameter(*p, "pred"), g.constant(target)); };
    return t;
}

Trial make_trial(const std::string& kind, Rng& rng) {
    if (kind == "conv2d") return make_conv(rng);
    if (kind == "avg_pool") return make_pool(rng, PoolMode::avg);
    if (kind == "max_pool") return make_pool(rng, PoolMode::max);
    if (kind == "batch_norm2d") return make_batch_norm(rng, true, Mode::train);
    if (kind == "batch_norm1d") return make_batch_norm(rng, false, Mode::train);
    if (kind == "batch_norm_eval") return make_batch_norm(rng, rng.below(2) == 0, Mode::eval);
    if (kind == "relu") return make_activation(rng, ActivationKind::relu);
    if (kind == "leaky_relu") return make_activation(rng, ActivationKind::leaky_relu);
    if (kind == "dense") return make_dense(rng);
    if (kind == "dropout") return make_dropout(rng);
    if (kind == "concat") return make_concat(rng);
    if (kind == "add") return make_add(rng);
    if (kind == "flatten_flip") return make_flatten_flip(rng);
    if (kind == "mse_loss") return make_mse(rng);
    throw ConfigError("unknown layer kind '" + kind + "'");
}

}  // namespace

const std::vector<std::string>& layer_kinds() {
    static const std::vector<std::string> kinds{"conv2d",     "avg_pool", "max_pool", "batch_norm2d", "batch_norm1d",
                                                "batch_norm_eval", "relu", "leaky_relu", "dense",     "dropout",
                                                "concat",     "add",      "flatten_flip", "mse_loss"};
    return kinds;
}

LayerCheckResult check_layer(const std::string& kind, const LayerCheckOptions& options) {
    LayerCheckResult result;
    result.kind = kind;
    Rng rng = Rng(options.seed).fork(kind);
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
        Trial t = make_trial(kind, rng);
        // A random projection keeps every output coordinate in play.
        std::shared_ptr<Tensor<double>> probe;
        const auto forward = t.forward;
        const LossBuilder build = [&, forward](G& g) {
            const NodeId y = forward(g);
            if (g.value(y).size() == 1) return y;
            if (!probe) {
                probe = std::make_shared<Tensor<double>>(uniform_tensor(g.value(y).shape(), rng));
            }
            return ops::weighted_sum(g, y, *probe);
        };
        GradcheckOptions go;
        go.step = options.step;
        go.tolerance = options.tolerance;
        go.seed = rng.next_u64();
        go.tamper = options.tamper;
        const GradcheckReport report = gradcheck(build, t.params, go);
        ++result.trials;
        for (const auto& e : report.entries) {
            if (e.max_rel_error >= result.max_rel_error) {
                result.max_rel_error = e.max_rel_error;
                result.worst = std::to_string(trial) + ":" + e.name;
            }
        }
        result.passed = result.passed && report.passed;
    }
    return result;
}

std::vector<LayerCheckResult> check_all_layers(const LayerCheckOptions& options) {
    std::vector<LayerCheckResult> out;
    for (const auto& kind : layer_kinds()) out.push_back(check_layer(kind, options));
    return out;
}

}  // namespace gazeforge::nn
