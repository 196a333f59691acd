// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdio>
#include <numbers>
#include <tuple>

#include <fmt/format.h>

#include "gazeforge/core/parallel.hpp"
#include "gazeforge/core/rng.hpp"

namespace gazeforge::data {

namespace {

constexpr double kIrisTravel = 0.2;  // fraction of the extent swept across the screen half-width

double smoothstep(double e0, double e1, double x) {
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Coverage of a disc of radius r at distance d, anti-aliased over one pixel.
double disc(double d, double r) { return 1.0 - smoothstep(r - 0.5, r + 0.5, d); }

nn::Tensor<float> render_eye(const SyntheticSubject& s, std::size_t E, double ix, double iy, std::uint64_t salt,
                             double noise, Rng& rng) {
    nn::Tensor<float> t(nn::Shape{3, E, E});
    const double e = static_cast<double>(E);
    Rng tex(keyed_hash(s.texture_seed, salt, 0x7E47));
    const double fx = tex.uniform(0.5, 1.5) * 2.0 * std::numbers::pi / e * 3.0;
    const double fy = tex.uniform(0.5, 1.5) * 2.0 * std::numbers::pi / e * 2.0;
    const double phase = tex.uniform(0.0, 2.0 * std::numbers::pi);
    const double skin[3] = {0.78, 0.62, 0.52};
    const double iris[3] = {0.30 + 0.1 * tex.uniform(), 0.22, 0.15};
    const double r = s.iris_radius * e;
    const double cx = 0.5 * e, cy = 0.5 * e, ax = 0.42 * e, ay = 0.26 * e;
    const double car_x = 0.88 * e, car_y = 0.52 * e, car_r = 0.05 * e;
    const std::size_t plane = E * E;
    for (std::size_t y = 0; y < E; ++y) {
        for (std::size_t x = 0; x < E; ++x) {
            const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
            const double texture = 0.04 * std::sin(fx * px + phase) * std::cos(fy * py);
            const double q = std::hypot((px - cx) / ax, (py - cy) / ay);
            const double sclera = 1.0 - smoothstep(1.0 - 1.0 / ax, 1.0 + 1.0 / ax, q);
            const double d = std::hypot(px - ix, py - iy);
            const double ir = disc(d, r);
            const double pu = disc(d, 0.45 * r);
            const double car = disc(std::hypot(px - car_x, py - car_y), car_r);
            for (std::size_t c = 0; c < 3; ++c) {
                double v = skin[c] + texture;
                v = v * (1.0 - sclera) + 0.94 * sclera;
                v = v * (1.0 - car) + 0.65 * car;
                v = v * (1.0 - ir) + iris[c] * ir;
                v = v * (1.0 - pu) + 0.04 * pu;
                if (noise > 0.0) v += noise * rng.normal();
                t[c * plane + y * E + x] = static_cast<float>(std::clamp(v, 0.0, 1.0) - 0.5);
            }
        }
    }
    return t;
}

nn::Tensor<float> mirror(const nn::Tensor<float>& t) {
    nn::Tensor<float> out(t.shape());
    const std::size_t C = t.dim(0), H = t.dim(1), W = t.dim(2);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) out[(c * H + y) * W + x] = t[(c * H + y) * W + (W - 1 - x)];
    return out;
}

}  // namespace

std::pair<double, double> iris_center_px(const ScreenRegion& screen, std::size_t extent, double gx, double gy) {
    const double e = static_cast<double>(extent);
    const double hx = 0.5 * (screen.x_max - screen.x_min), hy = 0.5 * (screen.y_max - screen.y_min);
    return {0.5 * e + kIrisTravel * e / hx * (gx - screen.center_x()),
            0.5 * e - kIrisTravel * e / hy * (gy - screen.center_y())};
}

RenderedPair render_eye_pair(const SyntheticConfig& cfg, const SyntheticSubject& subject, double gx, double gy,
                             std::uint64_t frame_key) {
    RenderedPair out;
    const auto [ix, iy] = iris_center_px(cfg.screen, cfg.extent, gx + subject.bias_x, gy + subject.bias_y);
    out.iris_x = ix;
    out.iris_y = iy;
    Rng rng = Rng(keyed_hash(subject.texture_seed, frame_key, cfg.seed));
    out.crops.right = render_eye(subject, cfg.extent, ix, iy, 1, cfg.noise, rng);
    // The left eye is rendered in right-eye coordinates and mirrored, so after the
    // model's flip both eyes present the same orientation.
    out.crops.left = mirror(render_eye(subject, cfg.extent, ix, iy, 2, cfg.noise, rng));
    const float nominal[8] = {0.28f, 0.42f, 0.42f, 0.50f, 0.58f, 0.42f, 0.72f, 0.50f};
    const double j = cfg.landmark_jitter;
    for (std::size_t e = 0; e < 2; ++e) {
        // Shift the box and grow or shrink it; the shrink never exceeds the half height.
        const double dx = j > 0.0 ? rng.uniform(-j, j) : 0.0;
        const double dy = j > 0.0 ? rng.uniform(-j, j) : 0.0;
        const double ds = j > 0.0 ? rng.uniform(-std::min(0.5 * j, 0.03), 0.5 * j) : 0.0;
        const float* b = nominal + 4 * e;
        const double v[4] = {b[0] + dx - ds, b[1] + dy - ds, b[2] + dx + ds, b[3] + dy + ds};
        for (std::size_t i = 0; i < 4; ++i) out.landmarks[4 * e + i] = static_cast<float>(std::clamp(v[i], 0.0, 1.0));
    }
    return out;
}

SyntheticSubject make_subject(const SyntheticConfig& cfg, std::size_t index) {
    SyntheticSubject s;
    s.subject_id = fmt::format("{}{:04d}", cfg.subject_prefix, index);
    Rng rng = Rng(cfg.seed).fork(s.subject_id);
    s.texture_seed = rng.next_u64();
    s.iris_radius = rng.uniform(0.10, 0.13);
    const double mag = cfg.bias_max > cfg.bias_min ? rng.uniform(cfg.bias_min, cfg.bias_max) : cfg.bias_min;
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.bias_x = mag * std::cos(angle);
    s.bias_y = mag * std::sin(angle);
    s.screen = cfg.screen;
    return s;
}

namespace {

// Renders every frame in parallel and hands each crop pair to `sink` with its record index.
Manifest render_all(const SyntheticConfig& cfg, std::vector<SyntheticSubject>& subjects,
                    std::vector<std::pair<double, double>>& iris_px,
                    const std::function<void(std::size_t, const FrameRecord&, EyePair&&)>& sink) {
    std::vector<std::pair<double, double>> dots;
    if (cfg.dots > 0) {
        Rng drng = Rng(cfg.seed).fork("dots");
        for (std::size_t i = 0; i < cfg.dots; ++i) {
            const double x = drng.uniform(cfg.screen.x_min, cfg.screen.x_max);
            const double y = drng.uniform(cfg.screen.y_min, cfg.screen.y_max);
            dots.emplace_back(std::round(x * 100.0) / 100.0, std::round(y * 100.0) / 100.0);
        }
    }
    const std::size_t n = cfg.subjects * cfg.frames_per_subject;
    Manifest m;
    m.records.resize(n);
    iris_px.resize(n);
    for (std::size_t s = 0; s < cfg.subjects; ++s) subjects.push_back(make_subject(cfg, s));
    parallel_for(n, [&](std::size_t i) {
        const SyntheticSubject& subj = subjects[i / cfg.frames_per_subject];
        const std::size_t f = i % cfg.frames_per_subject;
        Rng rng = Rng(subj.texture_seed).fork(static_cast<std::uint64_t>(f));
        double gx, gy;
        if (dots.empty()) {
            gx = rng.uniform(cfg.screen.x_min, cfg.screen.x_max);
            gy = rng.uniform(cfg.screen.y_min, cfg.screen.y_max);
        } else {
            std::tie(gx, gy) = dots[rng.below(dots.size())];
        }
        RenderedPair rp = render_eye_pair(cfg, subj, gx, gy, f);
        FrameRecord& r = m.records[i];
        r.subject_id = subj.subject_id;
        r.frame_id = fmt::format("{:05d}", f);
        r.gaze_x = gx;
        r.gaze_y = gy;
        r.landmarks = rp.landmarks;
        r.right_crop = r.left_crop = r.subject_id + "/" + r.frame_id + ".gze";
        iris_px[i] = {rp.iris_x, rp.iris_y};
        sink(i, r, std::move(rp.crops));
    });
    split_by_gaze_point(m.records, cfg.ratios, cfg.seed);
    m.seal();
    return m;
}

}  // namespace

SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& cfg) {
    SyntheticDataset ds;
    std::vector<EyePair> crops(cfg.subjects * cfg.frames_per_subject);
    ds.manifest = render_all(cfg, ds.subjects, ds.iris_px,
                             [&](std::size_t i, const FrameRecord&, EyePair&& pair) { crops[i] = std::move(pair); });
    for (std::size_t i = 0; i < crops.size(); ++i) ds.store.put(ds.manifest.records[i].right_crop, std::move(crops[i]));
    return ds;
}

Manifest write_synthetic_to_disk(const SyntheticConfig& cfg, const std::filesystem::path& dir) {
    std::vector<SyntheticSubject> subjects;
    std::vector<std::pair<double, double>> iris;
    Manifest m = render_all(cfg, subjects, iris, [&](std::size_t, const FrameRecord& r, EyePair&& pair) {
        write_eye_pair(dir / r.right_crop, pair);
    });
    write_manifest(dir / "manifest.tsv", m);
    return m;
}

void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticDataset& ds) {
    for (const auto& r : ds.manifest.records) write_eye_pair(dir / r.right_crop, ds.store.load(r));
    write_manifest(dir / "manifest.tsv", ds.manifest);
}

}  // namespace gazeforge::data
