// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gazeforge/nn/tensor.hpp"

namespace gazeforge::data {

/// 8-bit interleaved RGB.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;

    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return rgb[(y * width + x) * 3 + c]; }
};

Image decode_jpeg(std::string_view bytes);
std::string encode_jpeg(const Image& image, int quality = 95);

/// Axis-aligned box in frame pixels (x, y is the top-left corner).
struct Box {
    double x = 0, y = 0, w = 0, h = 0;
};

/// Samples the continuous region [x0, x1) x [y0, y1) (pixel i spans [i, i + 1)) onto an
/// extent x extent grid with bilinear interpolation at output pixel centres, edge
/// clamped. Returns 3 x extent x extent with values in [0, 1].
nn::Tensor<float> resample_bilinear(const Image& image, double x0, double y0, double x1, double y1,
                                    std::size_t extent);

struct EyeCrop {
    nn::Tensor<float> pixels;    // 3 x E x E, values in [-0.5, 0.5]
    std::array<float, 4> corners;  // crop top-left x, y and bottom-right x, y over frame extent
};

/// Square crop around the box centre (side = longer box side), clipped to the frame,
/// resized to `extent`. Throws DataError for a zero-area box.
EyeCrop extract_eye_crop(const Image& frame, const Box& box, std::size_t extent = 128);

}  // namespace gazeforge::data
