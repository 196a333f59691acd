// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "gazeforge/core/digest.hpp"

namespace gazeforge::model {

enum class Architecture { cnn, resnet, inception, inception_resnet };
enum class EyeMode { two_eye, one_eye };

/// `standard` is the published layout for 128x128 crops. `compact` keeps every
/// architecture's topology but uses stride-1 same-padded convs and one 2x pool per
/// stage, so it works at any extent divisible by 8 (tests and desk-scale runs).
enum class Geometry { standard, compact };

inline constexpr std::array<Architecture, 4> kArchitectures{Architecture::cnn, Architecture::resnet,
                                                            Architecture::inception,
                                                            Architecture::inception_resnet};

std::string_view to_string(Architecture a) noexcept;
std::string_view to_string(EyeMode m) noexcept;
std::string_view to_string(Geometry g) noexcept;
Architecture parse_architecture(std::string_view s);
EyeMode parse_eye_mode(std::string_view s);
Geometry parse_geometry(std::string_view s);

/// Display name used in reports, e.g. "Inception-ResNet".
std::string_view display_name(Architecture a) noexcept;

struct ModelSpec {
    Architecture architecture = Architecture::cnn;
    EyeMode eye_mode = EyeMode::two_eye;
    double dropout = 0.1;
    double leaky_slope = 0.01;
    double head_slope = 0.01;  // head hidden activations: 0 is ReLU, > 0 leaky ReLU
    std::size_t image_extent = 128;
    Geometry geometry = Geometry::standard;
    std::size_t width = 32;  // first-stage channels; later stages use 2x and 4x

    /// Throws ConfigError on out-of-range fields.
    void validate() const;

    /// Stable single-line key=value serialization; the fingerprint hashes this.
    std::string canonical() const;
    Digest fingerprint() const;

    std::size_t landmark_width() const noexcept { return eye_mode == EyeMode::two_eye ? 8 : 4; }

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Reduced 16x16 variant used by the assembly gradient checks.
ModelSpec reduced_spec(Architecture a, EyeMode m, std::size_t extent = 16, std::size_t width = 4);

}  // namespace gazeforge::model
