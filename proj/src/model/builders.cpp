// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/model/assembly.hpp"

namespace gazeforge::model {

using namespace layers;

namespace {

bool compact(const ModelSpec& s) { return s.geometry == Geometry::compact; }

// conv -> BN -> leaky -> conv -> BN -> pool2 -> dropout, both convs same-padded.
Node resnet_block(const ModelSpec& s, const std::string& name, std::size_t channels, std::size_t kernel) {
    const std::size_t second_stride = compact(s) ? 1 : 2;
    return chain(name, {conv("conv1", channels, kernel, 1, PadRule::same), batch_norm("bn1"),
                        leaky_relu("act1", s.leaky_slope), conv("conv2", channels, kernel, second_stride, PadRule::same),
                        batch_norm("bn2"), pool("pool", nn::PoolMode::avg, 2), dropout("dropout", s.dropout)});
}

Node downsample(const ModelSpec& s, const std::string& name, std::size_t channels, std::size_t kernel,
                std::size_t stride, PadRule rule) {
    return chain(name, {conv("conv", channels, kernel, stride, rule), batch_norm("bn"), inferred_avg_pool("pool"),
                        dropout("dropout", s.dropout)});
}

// conv -> BN -> leaky -> pool2 -> dropout
Node conv_stage(const ModelSpec& s, const std::string& name, std::size_t channels, std::size_t kernel,
                std::size_t stride) {
    const PadRule rule = compact(s) ? PadRule::same : PadRule::valid;
    return chain(name, {conv("conv", channels, kernel, stride, rule), batch_norm("bn"), leaky_relu("act", s.leaky_slope),
                        pool("pool", nn::PoolMode::avg, 2), dropout("dropout", s.dropout)});
}

Node inception_branches(std::size_t wide, std::size_t narrow) {
    return branches("branches",
                    {chain("b1x1", {conv("conv", wide, 1, 1, PadRule::valid), batch_norm("bn")}),
                     chain("b3x3", {conv("reduce", wide, 1, 1, PadRule::valid),
                                    conv("conv", wide, 3, 1, PadRule::fixed, 1), batch_norm("bn")}),
                     chain("b5x5", {conv("reduce", narrow, 1, 1, PadRule::valid),
                                    conv("conv", narrow, 5, 1, PadRule::fixed, 2), batch_norm("bn")}),
                     chain("bpool", {pool("pool", nn::PoolMode::max, 3, 1, 1),
                                     conv("conv", narrow, 1, 1, PadRule::valid), batch_norm("bn")})});
}

Node inception_block(const ModelSpec& s, const std::string& name, std::size_t branch_wide, std::size_t out_channels,
                     std::size_t kernel, std::size_t stride) {
    return chain(name, {inception_branches(branch_wide, branch_wide / 4),
                        conv_stage(s, "reduction", out_channels, kernel, stride)});
}

}  // namespace

Node build_cnn_encoder(const ModelSpec& s) {
    const std::size_t w = s.width;
    if (compact(s)) {
        return chain("", {conv("conv1", w, 3, 1, PadRule::same), pool("pool1", nn::PoolMode::avg, 2),
                          conv("conv2", 2 * w, 3, 1, PadRule::same), pool("pool2", nn::PoolMode::avg, 2),
                          conv("conv3", 4 * w, 3, 1, PadRule::same), pool("pool3", nn::PoolMode::avg, 2),
                          flatten("flatten")});
    }
    return chain("", {conv("conv1", w, 7, 2, PadRule::valid), pool("pool1", nn::PoolMode::avg, 2),
                      conv("conv2", 2 * w, 5, 2, PadRule::valid), pool("pool2", nn::PoolMode::avg, 2),
                      conv("conv3", 4 * w, 3, 1, PadRule::valid), pool("pool3", nn::PoolMode::avg, 2),
                      flatten("flatten")});
}

Node build_resnet_encoder(const ModelSpec& s) {
    const std::size_t w = s.width;
    const bool c = compact(s);
    Node ds1 = c ? downsample(s, "downsample1", 2 * w, 3, 1, PadRule::same)
                 : downsample(s, "downsample1", 2 * w, 5, 2, PadRule::same);
    Node ds2 = downsample(s, "downsample2", 4 * w, 3, 1, PadRule::same);
    return chain("", {resnet_block(s, "block1", w, c ? 3 : 4),
                      residual("", resnet_block(s, "block2", 2 * w, 3), std::move(ds1)),
                      residual("", resnet_block(s, "block3", 4 * w, 2), std::move(ds2)), flatten("flatten")});
}

Node build_inception_encoder(const ModelSpec& s) {
    const std::size_t w = s.width;
    const bool c = compact(s);
    return chain("", {conv_stage(s, "stem", w, c ? 3 : 7, c ? 1 : 2),
                      inception_block(s, "block_a", w, 2 * w, c ? 3 : 5, c ? 1 : 2),
                      inception_block(s, "block_b", 2 * w, 4 * w, 3, 1), flatten("flatten")});
}

Node build_inception_resnet_encoder(const ModelSpec& s) {
    const std::size_t w = s.width;
    const bool c = compact(s);
    // Shortcuts follow the host's valid-padding convention so the inferred pools land
    // exactly on the block outputs (13 -> 6 and 4 -> 2 at 128x128).
    Node ds1 = c ? downsample(s, "downsample1", 2 * w, 3, 1, PadRule::same)
                 : downsample(s, "downsample1", 2 * w, 5, 2, PadRule::valid);
    Node ds2 = c ? downsample(s, "downsample2", 4 * w, 3, 1, PadRule::same)
                 : downsample(s, "downsample2", 4 * w, 3, 1, PadRule::valid);
    return chain("", {conv_stage(s, "stem", w, c ? 3 : 7, c ? 1 : 2),
                      residual("", inception_block(s, "block_a", w, 2 * w, c ? 3 : 5, c ? 1 : 2), std::move(ds1)),
                      residual("", inception_block(s, "block_b", 2 * w, 4 * w, 3, 1), std::move(ds2)),
                      flatten("flatten")});
}

Node build_encoder(const ModelSpec& s) {
    switch (s.architecture) {
        case Architecture::cnn: return build_cnn_encoder(s);
        case Architecture::resnet: return build_resnet_encoder(s);
        case Architecture::inception: return build_inception_encoder(s);
        case Architecture::inception_resnet: return build_inception_resnet_encoder(s);
    }
    return build_cnn_encoder(s);
}

Node build_landmark_net() {
    return chain("", {dense("dense1", 128), batch_norm("bn1"), relu("act1"), dense("dense2", 16), batch_norm("bn2"),
                      relu("act2"), dense("dense3", kLandmarkFeatures), batch_norm("bn3"), relu("act3")});
}

Node build_head_hidden(const ModelSpec& s) {
    auto act = [&](const char* name) { return s.head_slope > 0.0 ? leaky_relu(name, s.head_slope) : relu(name); };
    return chain("", {dense("dense1", 8), act("act1"), dense("dense2", kTapWidth), act("act2")});
}

Node build_head_output() { return chain("", {dense("output", 2)}); }

}  // namespace gazeforge::model
