// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/data/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>

#include <jpeglib.h>

#include "gazeforge/core/error.hpp"

namespace gazeforge::data {

namespace {

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegError*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

}  // namespace

Image decode_jpeg(std::string_view bytes) {
    jpeg_decompress_struct cinfo{};
    JpegError err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = on_jpeg_error;
    Image img;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DataError(std::string("jpeg decode failed: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    img.width = cinfo.output_width;
    img.height = cinfo.output_height;
    img.rgb.resize(img.width * img.height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * img.width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

std::string encode_jpeg(const Image& image, int quality) {
    if (image.rgb.size() != image.width * image.height * 3) throw UsageError("image buffer size mismatch");
    jpeg_compress_struct cinfo{};
    JpegError err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = on_jpeg_error;
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        throw DataError(std::string("jpeg encode failed: ") + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = static_cast<JDIMENSION>(image.width);
    cinfo.image_height = static_cast<JDIMENSION>(image.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<std::uint8_t*>(image.rgb.data()) + static_cast<std::size_t>(cinfo.next_scanline) * image.width * 3;
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::string out(reinterpret_cast<const char*>(buffer), size);
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    return out;
}

nn::Tensor<float> resample_bilinear(const Image& image, double x0, double y0, double x1, double y1,
                                    std::size_t extent) {
    if (image.width == 0 || image.height == 0) throw DataError("cannot resample an empty image");
    nn::Tensor<float> out(nn::Shape{3, extent, extent});
    const double sx = (x1 - x0) / static_cast<double>(extent);
    const double sy = (y1 - y0) / static_cast<double>(extent);
    const double max_x = static_cast<double>(image.width - 1), max_y = static_cast<double>(image.height - 1);
    const std::size_t plane = extent * extent;
    for (std::size_t j = 0; j < extent; ++j) {
        const double py = std::clamp(y0 + (static_cast<double>(j) + 0.5) * sy - 0.5, 0.0, max_y);
        const auto r0 = static_cast<std::size_t>(py);
        const std::size_t r1 = std::min(r0 + 1, image.height - 1);
        const double fy = py - static_cast<double>(r0);
        for (std::size_t i = 0; i < extent; ++i) {
            const double px = std::clamp(x0 + (static_cast<double>(i) + 0.5) * sx - 0.5, 0.0, max_x);
            const auto c0 = static_cast<std::size_t>(px);
            const std::size_t c1 = std::min(c0 + 1, image.width - 1);
            const double fx = px - static_cast<double>(c0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = image.at(c0, r0, c) * (1.0 - fx) + image.at(c1, r0, c) * fx;
                const double bot = image.at(c0, r1, c) * (1.0 - fx) + image.at(c1, r1, c) * fx;
                out[c * plane + j * extent + i] = static_cast<float>((top * (1.0 - fy) + bot * fy) / 255.0);
            }
        }
    }
    return out;
}

EyeCrop extract_eye_crop(const Image& frame, const Box& box, std::size_t extent) {
    if (!(box.w > 0.0 && box.h > 0.0)) throw DataError("degenerate eye box (zero area)");
    const double cx = box.x + box.w / 2.0, cy = box.y + box.h / 2.0;
    const double side = std::max(box.w, box.h);
    const double W = static_cast<double>(frame.width), H = static_cast<double>(frame.height);
    const double x0 = std::clamp(cx - side / 2.0, 0.0, W), x1 = std::clamp(cx + side / 2.0, 0.0, W);
    const double y0 = std::clamp(cy - side / 2.0, 0.0, H), y1 = std::clamp(cy + side / 2.0, 0.0, H);
    if (!(x1 > x0 && y1 > y0)) throw DataError("eye box lies outside the frame");
    EyeCrop crop;
    crop.pixels = resample_bilinear(frame, x0, y0, x1, y1, extent);
    for (auto& v : crop.pixels.values()) v -= 0.5f;
    crop.corners = {static_cast<float>(x0 / W), static_cast<float>(y0 / H), static_cast<float>(x1 / W),
                    static_cast<float>(y1 / H)};
    return crop;
}

}  // namespace gazeforge::data
