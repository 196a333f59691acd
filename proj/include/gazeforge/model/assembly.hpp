// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gazeforge/core/rng.hpp"
#include "gazeforge/model/network.hpp"
#include "gazeforge/model/spec.hpp"
#include "gazeforge/model/state.hpp"

namespace gazeforge::model {

/// Eye tower layer trees, before shape resolution. Input is 3 x E x E.
Node build_cnn_encoder(const ModelSpec& spec);
Node build_resnet_encoder(const ModelSpec& spec);
Node build_inception_encoder(const ModelSpec& spec);
Node build_inception_resnet_encoder(const ModelSpec& spec);
Node build_encoder(const ModelSpec& spec);

Node build_landmark_net();
/// dense(8)-act-dense(4)-act, act = ReLU or leaky ReLU per spec.head_slope; the 4-wide
/// output is the calibration tap.
Node build_head_hidden(const ModelSpec& s);
Node build_head_output();

inline constexpr std::size_t kLandmarkFeatures = 16;
inline constexpr std::size_t kTapWidth = 4;

/// One of the eight full models: a shared eye tower, the landmark net and the head.
struct Assembly {
    ModelSpec spec;
    Network tower;
    Network landmarks;
    Network head_hidden;
    Network head_output;

    std::size_t feature_width() const { return tower.output.at(0); }
    std::size_t head_input_width() const { return head_hidden.input.at(0); }
    std::size_t eye_count() const { return spec.eye_mode == EyeMode::two_eye ? 2 : 1; }
};

Assembly build_assembly(const ModelSpec& spec);

template <class T>
ModelState<T> init_state(const Assembly& a, std::uint64_t seed);

/// Sum of trainable element counts, derived from the resolved layer specs.
std::size_t count_parameters(const Assembly& a);

/// Graph outputs of one forward pass.
struct ForwardNodes {
    nn::NodeId prediction = 0;  // N x 2, cm
    nn::NodeId tap = 0;         // N x 4
    std::vector<nn::NodeId> eye_features;  // per eye, N x feature_width
};

/// `images` holds {right, left} for two-eye assemblies (left unflipped: it is mirrored
/// here before entering the shared tower) or {eye} for one-eye assemblies.
template <class T>
ForwardNodes forward_graph(const Assembly& a, ModelState<T>& state, nn::Graph<T>& g,
                           const std::vector<nn::NodeId>& images, nn::NodeId landmarks, nn::Mode mode, Rng& rng);

template <class T>
struct Prediction {
    nn::Tensor<T> xy;
    nn::Tensor<T> tap;
};

template <class T>
Prediction<T> forward_two_eye(const Assembly& a, ModelState<T>& state, const nn::Tensor<T>& right,
                              const nn::Tensor<T>& left, const nn::Tensor<T>& landmarks8, nn::Mode mode, Rng& rng);

template <class T>
Prediction<T> forward_one_eye(const Assembly& a, ModelState<T>& state, const nn::Tensor<T>& eye,
                              const nn::Tensor<T>& landmarks4, nn::Mode mode, Rng& rng);

/// Eval-mode inference; never writes to `state`.
template <class T>
Prediction<T> predict(const Assembly& a, const ModelState<T>& state, const std::vector<nn::Tensor<T>>& images,
                      const nn::Tensor<T>& landmarks);

/// The N x 4 activations feeding the linear output layer, in eval mode.
template <class T>
nn::Tensor<T> extract_penultimate_features(const Assembly& a, const ModelState<T>& state,
                                           const std::vector<nn::Tensor<T>>& images, const nn::Tensor<T>& landmarks);

}  // namespace gazeforge::model
