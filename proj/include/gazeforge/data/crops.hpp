// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "gazeforge/data/manifest.hpp"
#include "gazeforge/nn/tensor.hpp"

namespace gazeforge::data {

/// Right and left eye crops, each 3 x E x E; an absent eye is an empty tensor.
struct EyePair {
    nn::Tensor<float> right;
    nn::Tensor<float> left;
};

class CropStore {
public:
    virtual ~CropStore() = default;
    virtual EyePair load(const FrameRecord& record) const = 0;
};

/// Crops held in memory, keyed by the record's crop path.
class MemoryCropStore : public CropStore {
public:
    void put(const std::string& key, EyePair pair) { pairs_[key] = std::move(pair); }
    EyePair load(const FrameRecord& record) const override;
    std::size_t size() const noexcept { return pairs_.size(); }

private:
    std::map<std::string, EyePair> pairs_;
};

/// Crops on disk below `root`. A `.gze` path holds both eyes as tensor entries
/// "right"/"left"; a `.jpg` path is a single eye image decoded and normalized on load.
class FileCropStore : public CropStore {
public:
    explicit FileCropStore(std::filesystem::path root, std::size_t extent = 128)
        : root_(std::move(root)), extent_(extent) {}
    EyePair load(const FrameRecord& record) const override;

private:
    std::filesystem::path root_;
    std::size_t extent_;
};

void write_eye_pair(const std::filesystem::path& path, const EyePair& pair);
EyePair read_eye_pair(const std::filesystem::path& path);

/// Crop tensor (values in [-0.5, 0.5]) to an 8-bit image and back.
std::string encode_crop_jpeg(const nn::Tensor<float>& crop, int quality = 95);
nn::Tensor<float> decode_crop_jpeg(const std::string& bytes, std::size_t extent);

}  // namespace gazeforge::data
