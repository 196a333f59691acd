// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/data/gazecapture.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "gazeforge/core/error.hpp"
#include "gazeforge/core/parallel.hpp"
#include "gazeforge/data/crops.hpp"
#include "gazeforge/io/tensor_file.hpp"

namespace gazeforge::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::optional<json> read_json(const fs::path& p, std::string& why) {
    std::ifstream in(p);
    if (!in) {
        why = "missing " + p.filename().string();
        return std::nullopt;
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        why = "corrupt " + p.filename().string() + ": " + e.what();
        return std::nullopt;
    }
}

template <class T>
T at(const json& doc, const char* key, std::size_t i) {
    return doc.at(key).at(i).get<T>();
}

void warn(RawIndex& idx, std::string msg) {
    spdlog::warn("{}", msg);
    idx.warnings.push_back(std::move(msg));
}

}  // namespace

RawIndex load_gazecapture_metadata(const fs::path& root, const GazeCaptureFilters& filters) {
    if (!fs::is_directory(root)) throw DataError("dataset root not found: " + root.string());
    RawIndex idx;
    std::vector<fs::path> subjects;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) subjects.push_back(e.path());
    std::sort(subjects.begin(), subjects.end());
    if (subjects.empty()) warn(idx, "no subject directories under " + root.string());

    for (const auto& dir : subjects) {
        const std::string sid = dir.filename().string();
        std::string why;
        const char* names[] = {"info.json", "screen.json", "dotInfo.json", "frames.json",
                               "appleFace.json", "appleLeftEye.json", "appleRightEye.json"};
        std::vector<json> docs;
        for (const char* n : names) {
            auto d = read_json(dir / n, why);
            if (!d) break;
            docs.push_back(std::move(*d));
        }
        if (docs.size() != std::size(names)) {
            warn(idx, "subject " + sid + ": " + why + ", skipped");
            continue;
        }
        const json &info = docs[0], &screen = docs[1], &dot = docs[2], &frames = docs[3], &face = docs[4],
                   &leye = docs[5], &reye = docs[6];
        std::string device;
        try {
            device = info.at("DeviceName").get<std::string>();
        } catch (const json::exception&) {
            warn(idx, "subject " + sid + ": info.json lacks DeviceName, skipped");
            continue;
        }
        if (!frames.is_array()) {
            warn(idx, "subject " + sid + ": frames.json is not a list, skipped");
            continue;
        }
        if (filters.phones_only && device.find("iPhone") == std::string::npos) {
            idx.skipped += frames.size();
            continue;
        }
        for (std::size_t i = 0; i < frames.size(); ++i) {
            RawFrame f;
            f.subject_id = sid;
            try {
                const std::string file = frames.at(i).get<std::string>();
                f.frame_id = fs::path(file).stem().string();
                f.image = dir / "frames" / file;
                if (filters.portrait_only && at<int>(screen, "Orientation", i) != 1) {
                    ++idx.skipped;
                    continue;
                }
                if (!at<int>(face, "IsValid", i)) {
                    ++idx.skipped;
                    continue;
                }
                const double fx = at<double>(face, "X", i), fy = at<double>(face, "Y", i);
                f.right_valid = at<int>(reye, "IsValid", i) != 0;
                f.left_valid = at<int>(leye, "IsValid", i) != 0;
                // Eye boxes are stored relative to the face box.
                auto box = [&](const json& d) {
                    return Box{fx + at<double>(d, "X", i), fy + at<double>(d, "Y", i), at<double>(d, "W", i),
                               at<double>(d, "H", i)};
                };
                if (f.right_valid) f.right = box(reye);
                if (f.left_valid) f.left = box(leye);
                f.gaze_x = at<double>(dot, "XCam", i);
                f.gaze_y = at<double>(dot, "YCam", i);
            } catch (const json::exception& e) {
                warn(idx, "subject " + sid + " frame " + std::to_string(i) + ": bad metadata (" + e.what() + "), skipped");
                ++idx.skipped;
                continue;
            }
            const bool keep = filters.require_both_eyes ? (f.right_valid && f.left_valid)
                                                        : (f.right_valid || f.left_valid);
            if (!keep) {
                ++idx.skipped;
                continue;
            }
            idx.frames.push_back(std::move(f));
        }
    }
    std::stable_sort(idx.frames.begin(), idx.frames.end(), [](const RawFrame& a, const RawFrame& b) {
        return std::tie(a.subject_id, a.frame_id) < std::tie(b.subject_id, b.frame_id);
    });
    return idx;
}

PreprocessResult preprocess_gazecapture(const RawIndex& index, const fs::path& out_dir, const PreprocessOptions& opts) {
    const std::size_t n = index.frames.size();
    std::vector<std::optional<FrameRecord>> slots(n);
    std::vector<std::string> errors(n);
    parallel_for(n, [&](std::size_t i) {
        const RawFrame& f = index.frames[i];
        try {
            const Image img = decode_jpeg(io::read_file(f.image));
            FrameRecord r;
            r.subject_id = f.subject_id;
            r.frame_id = f.frame_id;
            r.gaze_x = f.gaze_x;
            r.gaze_y = f.gaze_y;
            EyePair pair;
            const std::string stem = f.subject_id + "/" + f.frame_id;
            auto take = [&](const Box& b, std::size_t slot, nn::Tensor<float>& dst, std::string& path,
                            const char* suffix) {
                EyeCrop c = extract_eye_crop(img, b, opts.extent);
                std::copy(c.corners.begin(), c.corners.end(), r.landmarks.begin() + static_cast<std::ptrdiff_t>(slot));
                dst = std::move(c.pixels);
                if (opts.jpeg_crops) {
                    path = stem + suffix;
                    io::write_file_atomic(out_dir / path, encode_crop_jpeg(dst));
                } else {
                    path = stem + ".gze";
                }
            };
            if (f.right_valid) take(f.right, 0, pair.right, r.right_crop, "_right.jpg");
            if (f.left_valid) take(f.left, 4, pair.left, r.left_crop, "_left.jpg");
            if (!opts.jpeg_crops) write_eye_pair(out_dir / (stem + ".gze"), pair);
            slots[i] = std::move(r);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    PreprocessResult res;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i]) {
            res.manifest.records.push_back(std::move(*slots[i]));
        } else {
            ++res.rejected;
            std::string msg = "frame " + index.frames[i].subject_id + "/" + index.frames[i].frame_id +
                              " rejected: " + errors[i];
            spdlog::warn("{}", msg);
            res.warnings.push_back(std::move(msg));
        }
    }
    split_by_gaze_point(res.manifest.records, opts.ratios, opts.seed);
    res.manifest.seal();
    write_manifest(out_dir / "manifest.tsv", res.manifest);
    return res;
}

}  // namespace gazeforge::data
