// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/model/spec.hpp"

#include <charconv>

#include "gazeforge/core/error.hpp"

namespace gazeforge::model {

namespace {

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string_view to_string(Architecture a) noexcept {
    switch (a) {
        case Architecture::cnn: return "cnn";
        case Architecture::resnet: return "resnet";
        case Architecture::inception: return "inception";
        case Architecture::inception_resnet: return "inception_resnet";
    }
    return "?";
}

std::string_view to_string(EyeMode m) noexcept { return m == EyeMode::two_eye ? "two_eye" : "one_eye"; }

std::string_view to_string(Geometry g) noexcept { return g == Geometry::standard ? "standard" : "compact"; }

std::string_view display_name(Architecture a) noexcept {
    switch (a) {
        case Architecture::cnn: return "CNN";
        case Architecture::resnet: return "ResNet";
        case Architecture::inception: return "Inception";
        case Architecture::inception_resnet: return "Inception-ResNet";
    }
    return "?";
}

Architecture parse_architecture(std::string_view s) {
    for (auto a : kArchitectures)
        if (s == to_string(a)) return a;
    if (s == "inception-resnet" || s == "incres") return Architecture::inception_resnet;
    throw ConfigError("unknown architecture '" + std::string(s) +
                      "' (expected cnn, resnet, inception, inception_resnet)");
}

EyeMode parse_eye_mode(std::string_view s) {
    if (s == "two_eye" || s == "two-eye") return EyeMode::two_eye;
    if (s == "one_eye" || s == "one-eye") return EyeMode::one_eye;
    throw ConfigError("unknown eye mode '" + std::string(s) + "' (expected two_eye, one_eye)");
}

Geometry parse_geometry(std::string_view s) {
    if (s == "standard") return Geometry::standard;
    if (s == "compact") return Geometry::compact;
    throw ConfigError("unknown geometry '" + std::string(s) + "' (expected standard, compact)");
}

void ModelSpec::validate() const {
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky slope must lie in [0, 1)");
    if (!(head_slope >= 0.0 && head_slope < 1.0)) throw ConfigError("head slope must lie in [0, 1)");
    if (image_extent == 0) throw ConfigError("image extent must be positive");
    if (width < 4 || width % 4 != 0) throw ConfigError("width must be a positive multiple of 4");
    if (geometry == Geometry::compact && image_extent % 8 != 0) {
        throw ConfigError("compact geometry needs an image extent divisible by 8, got " +
                          std::to_string(image_extent));
    }
}

std::string ModelSpec::canonical() const {
    return "architecture=" + std::string(to_string(architecture)) + ";eye_mode=" + std::string(to_string(eye_mode)) +
           ";dropout=" + shortest(dropout) + ";leaky_slope=" + shortest(leaky_slope) +
           ";head_slope=" + shortest(head_slope) +
           ";image_extent=" + std::to_string(image_extent) + ";geometry=" + std::string(to_string(geometry)) +
           ";width=" + std::to_string(width);
}

Digest ModelSpec::fingerprint() const { return sha256(canonical()); }

ModelSpec reduced_spec(Architecture a, EyeMode m, std::size_t extent, std::size_t width) {
    ModelSpec s;
    s.architecture = a;
    s.eye_mode = m;
    s.image_extent = extent;
    s.geometry = Geometry::compact;
    s.width = width;
    return s;
}

}  // namespace gazeforge::model
