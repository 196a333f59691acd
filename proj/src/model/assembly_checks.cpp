// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/model/assembly_checks.hpp"

#include <algorithm>

#include "gazeforge/core/error.hpp"
#include "gazeforge/model/assembly.hpp"

namespace gazeforge::model {

namespace {

void collect_pre_bn_biases(const Node& n, const std::string& parent, std::vector<std::string>& out) {
    const std::string path = n.name.empty() ? parent : parent + "." + n.name;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        const Node& c = n.children[i];
        collect_pre_bn_biases(c, path, out);
        if (n.type != Node::Type::chain || i + 1 >= n.children.size()) continue;
        const Node& next = n.children[i + 1];
        const bool affine = c.type == Node::Type::layer &&
                            (c.layer.kind == LayerKind::conv || c.layer.kind == LayerKind::dense);
        const bool bn = next.type == Node::Type::layer && next.layer.kind == LayerKind::batch_norm;
        if (affine && bn) out.push_back(path + "." + c.name + ".bias");
    }
}

}  // namespace

std::vector<std::string> biases_before_batch_norm(const Network& net) {
    std::vector<std::string> out;
    collect_pre_bn_biases(net.root, net.name, out);
    return out;
}

nn::GradcheckReport check_assembly(const ModelSpec& spec, const AssemblyCheckOptions& options) {
    const Assembly a = build_assembly(spec);
    ModelState<double> state = init_state<double>(a, options.seed);
    Rng rng = Rng(options.seed).fork("inputs");
    if (options.mode == nn::Mode::train && options.batch < 2) {
        throw ConfigError("train-mode assembly gradcheck needs batch >= 2");
    }
    // Move BN affine terms, biases and running statistics off their initial values so
    // those paths are exercised away from the identity.
    for (auto& [name, p] : state.params) {
        if (name.ends_with(".gamma") || name.ends_with(".beta") || name.ends_with(".bias")) {
            for (auto& v : p.value.values()) v += rng.uniform(-0.3, 0.3);
        }
    }
    for (auto& [name, b] : state.buffers) {
        const bool var = name.ends_with(".running_var");
        for (auto& v : b.values()) v = var ? rng.uniform(0.5, 2.0) : rng.uniform(-0.5, 0.5);
    }

    const std::size_t e = spec.image_extent;
    auto random = [&](nn::Shape shape, double lo, double hi) {
        nn::Tensor<double> t(std::move(shape));
        for (auto& v : t.values()) v = rng.uniform(lo, hi);
        return t;
    };
    std::vector<nn::Tensor<double>> images;
    for (std::size_t i = 0; i < a.eye_count(); ++i) images.push_back(random(nn::Shape{options.batch, 3, e, e}, -0.5, 0.5));
    const auto landmarks = random(nn::Shape{options.batch, spec.landmark_width()}, 0.0, 1.0);
    const auto target = random(nn::Shape{options.batch, 2}, -5.0, 5.0);
    const std::uint64_t dropout_seed = rng.next_u64();

    const nn::LossBuilder build = [&](nn::Graph<double>& g) {
        // Running statistics are a side effect of train mode; keep each evaluation on
        // the same starting values.
        ModelState<double>* live = &state;
        auto saved = live->buffers;
        std::vector<nn::NodeId> ids;
        for (const auto& img : images) ids.push_back(g.constant(img, "image"));
        Rng dropout_rng(dropout_seed);
        const auto nodes = forward_graph(a, *live, g, ids, g.constant(landmarks, "landmarks"), options.mode,
                                         dropout_rng);
        live->buffers = std::move(saved);
        return nn::ops::mse_loss(g, nodes.prediction, g.constant(target, "target"));
    };

    std::vector<std::string> skip;
    if (options.mode == nn::Mode::train) {
        for (const Network* net : {&a.tower, &a.landmarks, &a.head_hidden, &a.head_output}) {
            auto more = biases_before_batch_norm(*net);
            skip.insert(skip.end(), more.begin(), more.end());
        }
    }
    std::vector<std::pair<std::string, nn::Parameter<double>*>> params;
    for (auto& [name, p] : state.params)
        if (std::find(skip.begin(), skip.end(), name) == skip.end()) params.emplace_back(name, &p);
    nn::GradcheckOptions go;
    go.step = options.step;
    go.tolerance = options.tolerance;
    go.fallback_steps = options.fallback_steps;
    go.max_entries_per_tensor = options.entries_per_tensor;
    go.seed = options.seed;
    go.tamper = options.tamper;
    return nn::gradcheck(build, params, go);
}

}  // namespace gazeforge::model
