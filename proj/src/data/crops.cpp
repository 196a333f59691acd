// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/data/crops.hpp"

#include <algorithm>
#include <cmath>

#include "gazeforge/core/error.hpp"
#include "gazeforge/data/image.hpp"
#include "gazeforge/io/tensor_file.hpp"

namespace gazeforge::data {

namespace {

bool is_jpeg_path(const std::string& p) {
    const auto ext = std::filesystem::path(p).extension().string();
    return ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

EyePair MemoryCropStore::load(const FrameRecord& record) const {
    const std::string& key = record.has_right() ? record.right_crop : record.left_crop;
    auto it = pairs_.find(key);
    if (it == pairs_.end()) throw DataError("no crops stored for " + record.subject_id + "/" + record.frame_id);
    EyePair out;
    if (record.has_right()) out.right = it->second.right;
    if (record.has_left()) out.left = it->second.left;
    return out;
}

EyePair FileCropStore::load(const FrameRecord& record) const {
    EyePair out;
    if (record.right_crop == record.left_crop && !is_jpeg_path(record.right_crop)) {
        out = read_eye_pair(root_ / record.right_crop);
        return out;
    }
    auto one = [&](const std::string& rel, bool right) -> nn::Tensor<float> {
        if (rel.empty()) return {};
        if (is_jpeg_path(rel)) return decode_crop_jpeg(io::read_file(root_ / rel), extent_);
        EyePair p = read_eye_pair(root_ / rel);
        return right ? p.right : p.left;
    };
    out.right = one(record.right_crop, true);
    out.left = one(record.left_crop, false);
    return out;
}

void write_eye_pair(const std::filesystem::path& path, const EyePair& pair) {
    io::TensorFile file;
    if (!pair.right.empty()) file.entries.emplace_back("right", pair.right);
    if (!pair.left.empty()) file.entries.emplace_back("left", pair.left);
    io::write_tensor_file(path, file);
}

EyePair read_eye_pair(const std::filesystem::path& path) {
    const io::TensorFile file = io::read_tensor_file(path);
    EyePair pair;
    for (const auto& [name, t] : file.entries) {
        if (t.rank() != 3 || t.dim(0) != 3) throw DataError(path.string() + ": crop '" + name + "' is not 3 x E x E");
        if (name == "right") pair.right = t;
        else if (name == "left") pair.left = t;
        else throw DataError(path.string() + ": unexpected entry '" + name + "'");
    }
    return pair;
}

std::string encode_crop_jpeg(const nn::Tensor<float>& crop, int quality) {
    if (crop.rank() != 3 || crop.dim(0) != 3) throw UsageError("crop must be 3 x H x W");
    Image img;
    img.height = crop.dim(1);
    img.width = crop.dim(2);
    img.rgb.resize(img.width * img.height * 3);
    const std::size_t plane = img.width * img.height;
    for (std::size_t p = 0; p < plane; ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = std::clamp((static_cast<double>(crop[c * plane + p]) + 0.5) * 255.0, 0.0, 255.0);
            img.rgb[p * 3 + c] = static_cast<std::uint8_t>(std::lround(v));
        }
    }
    return encode_jpeg(img, quality);
}

nn::Tensor<float> decode_crop_jpeg(const std::string& bytes, std::size_t extent) {
    const Image img = decode_jpeg(bytes);
    nn::Tensor<float> t = resample_bilinear(img, 0.0, 0.0, static_cast<double>(img.width),
                                            static_cast<double>(img.height), extent);
    for (auto& v : t.values()) v -= 0.5f;
    return t;
}

}  // namespace gazeforge::data
