// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/model/assembly.hpp"

#include "gazeforge/core/error.hpp"

namespace gazeforge::model {

Assembly build_assembly(const ModelSpec& spec) {
    spec.validate();
    Assembly a;
    a.spec = spec;
    a.tower = resolve_network("tower", build_encoder(spec), {3, spec.image_extent, spec.image_extent});
    a.landmarks = resolve_network("landmarks", build_landmark_net(), {spec.landmark_width()});
    const std::size_t head_in = a.eye_count() * a.feature_width() + kLandmarkFeatures;
    a.head_hidden = resolve_network("head", build_head_hidden(spec), {head_in});
    a.head_output = resolve_network("head", build_head_output(), {kTapWidth});
    return a;
}

template <class T>
ModelState<T> init_state(const Assembly& a, std::uint64_t seed) {
    ModelState<T> state;
    state.fingerprint = a.spec.fingerprint();
    for (const Network* net : {&a.tower, &a.landmarks, &a.head_hidden, &a.head_output}) initialize(*net, state, seed);
    return state;
}

std::size_t count_parameters(const Assembly& a) {
    std::size_t n = 0;
    for (const Network* net : {&a.tower, &a.landmarks, &a.head_hidden, &a.head_output})
        for (const auto& p : net->params) n += p.shape.numel();
    return n;
}

template <class T>
ForwardNodes forward_graph(const Assembly& a, ModelState<T>& state, nn::Graph<T>& g,
                           const std::vector<nn::NodeId>& images, nn::NodeId landmarks, nn::Mode mode, Rng& rng) {
    if (images.size() != a.eye_count()) {
        throw UsageError(std::string(to_string(a.spec.eye_mode)) + " assembly expects " +
                         std::to_string(a.eye_count()) + " eye image batch(es), got " + std::to_string(images.size()));
    }
    const std::size_t batch = g.value(landmarks).shape().rank() ? g.value(landmarks).dim(0) : 0;
    ForwardNodes out;
    std::vector<nn::NodeId> parts;
    for (std::size_t i = 0; i < images.size(); ++i) {
        nn::NodeId x = images[i];
        if (g.value(x).rank() == 0 || g.value(x).dim(0) != batch) {
            throw UsageError("eye image batch " + g.value(x).shape().str() + " does not match landmark batch " +
                             std::to_string(batch));
        }
        if (i == 1) x = nn::ops::flip_horizontal(g, x, "left.flip");
        out.eye_features.push_back(run_network(a.tower, state, g, x, mode, rng));
        parts.push_back(out.eye_features.back());
    }
    parts.push_back(run_network(a.landmarks, state, g, landmarks, mode, rng));
    const nn::NodeId joined = nn::ops::concat(g, parts, "features");
    out.tap = run_network(a.head_hidden, state, g, joined, mode, rng);
    out.prediction = run_network(a.head_output, state, g, out.tap, mode, rng);
    return out;
}

namespace {

template <class T>
Prediction<T> run_detached(const Assembly& a, ModelState<T>& state, const std::vector<const nn::Tensor<T>*>& images,
                           const nn::Tensor<T>& landmarks, nn::Mode mode, Rng& rng) {
    nn::Graph<T> g(false);
    std::vector<nn::NodeId> ids;
    for (const auto* img : images) ids.push_back(g.constant(*img, "image"));
    const auto nodes = forward_graph(a, state, g, ids, g.constant(landmarks, "landmarks"), mode, rng);
    return {g.value(nodes.prediction), g.value(nodes.tap)};
}

}  // namespace

template <class T>
Prediction<T> forward_two_eye(const Assembly& a, ModelState<T>& state, const nn::Tensor<T>& right,
                              const nn::Tensor<T>& left, const nn::Tensor<T>& landmarks8, nn::Mode mode, Rng& rng) {
    if (a.spec.eye_mode != EyeMode::two_eye) throw UsageError("forward_two_eye called on a one-eye assembly");
    return run_detached<T>(a, state, {&right, &left}, landmarks8, mode, rng);
}

template <class T>
Prediction<T> forward_one_eye(const Assembly& a, ModelState<T>& state, const nn::Tensor<T>& eye,
                              const nn::Tensor<T>& landmarks4, nn::Mode mode, Rng& rng) {
    if (a.spec.eye_mode != EyeMode::one_eye) throw UsageError("forward_one_eye called on a two-eye assembly");
    return run_detached<T>(a, state, {&eye}, landmarks4, mode, rng);
}

template <class T>
Prediction<T> predict(const Assembly& a, const ModelState<T>& state, const std::vector<nn::Tensor<T>>& images,
                      const nn::Tensor<T>& landmarks) {
    std::vector<const nn::Tensor<T>*> ptrs;
    for (const auto& img : images) ptrs.push_back(&img);
    Rng unused(0);
    // Eval mode reads running statistics and never updates them.
    return run_detached<T>(a, const_cast<ModelState<T>&>(state), ptrs, landmarks, nn::Mode::eval, unused);
}

template <class T>
nn::Tensor<T> extract_penultimate_features(const Assembly& a, const ModelState<T>& state,
                                           const std::vector<nn::Tensor<T>>& images, const nn::Tensor<T>& landmarks) {
    return predict(a, state, images, landmarks).tap;
}

#define GAZEFORGE_INSTANTIATE_ASSEMBLY(T)                                                                           \
    template ModelState<T> init_state<T>(const Assembly&, std::uint64_t);                                        \
    template ForwardNodes forward_graph<T>(const Assembly&, ModelState<T>&, nn::Graph<T>&,                         \
                                           const std::vector<nn::NodeId>&, nn::NodeId, nn::Mode, Rng&);           \
    template Prediction<T> forward_two_eye<T>(const Assembly&, ModelState<T>&, const nn::Tensor<T>&,              \
                                              const nn::Tensor<T>&, const nn::Tensor<T>&, nn::Mode, Rng&);        \
    template Prediction<T> forward_one_eye<T>(const Assembly&, ModelState<T>&, const nn::Tensor<T>&,              \
                                              const nn::Tensor<T>&, nn::Mode, Rng&);                              \
    template Prediction<T> predict<T>(const Assembly&, const ModelState<T>&, const std::vector<nn::Tensor<T>>&,   \
                                      const nn::Tensor<T>&);                                                      \
    template nn::Tensor<T> extract_penultimate_features<T>(const Assembly&, const ModelState<T>&,                 \
                                                           const std::vector<nn::Tensor<T>>&, const nn::Tensor<T>&);

GAZEFORGE_INSTANTIATE_ASSEMBLY(float)
GAZEFORGE_INSTANTIATE_ASSEMBLY(double)

}  // namespace gazeforge::model
