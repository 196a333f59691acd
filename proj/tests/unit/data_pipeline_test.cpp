// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "gazeforge/core/error.hpp"
#include "gazeforge/core/rng.hpp"
#include "gazeforge/data/batches.hpp"
#include "gazeforge/data/crops.hpp"
#include "gazeforge/data/gazecapture.hpp"
#include "gazeforge/data/image.hpp"
#include "gazeforge/data/manifest.hpp"
#include "gazeforge/data/split.hpp"
#include "gazeforge/data/synthetic.hpp"
#include "gazeforge/io/tensor_file.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace gazeforge;
using namespace gazeforge::data;
using gazeforge::testing::ScratchDir;

namespace {

FrameRecord make_record(int i, double gx, double gy) {
    FrameRecord r;
    r.subject_id = "s" + std::to_string(i % 7);
    r.frame_id = std::to_string(i);
    r.gaze_x = gx;
    r.gaze_y = gy;
    r.landmarks = {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.2f, 0.7f, 0.4f};
    r.right_crop = r.left_crop = r.subject_id + "/" + r.frame_id + ".gze";
    return r;
}

// 10,000 frames spread evenly over 200 distinct points.
std::vector<FrameRecord> grid_records() {
    Rng rng(3);
    std::vector<std::pair<double, double>> pts;
    for (int p = 0; p < 200; ++p) pts.emplace_back(std::round(rng.uniform(-3, 3) * 100) / 100, std::round(rng.uniform(-12, -1) * 100) / 100);
    std::vector<FrameRecord> out;
    for (int i = 0; i < 10000; ++i) out.push_back(make_record(i, pts[i % 200].first, pts[i % 200].second));
    return out;
}

Image constant_image(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img{w, h, {}};
    for (std::size_t i = 0; i < w * h; ++i) img.rgb.insert(img.rgb.end(), {r, g, b});
    return img;
}

Image random_image(std::size_t w, std::size_t h, Rng& rng) {
    Image img{w, h, std::vector<std::uint8_t>(w * h * 3)};
    for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

// Bilinear sample written from the textbook formula: floor neighbours, clamp indices.
double oracle_bilinear(const Image& img, double x, double y, std::size_t c) {
    x = std::min(std::max(x, 0.0), static_cast<double>(img.width - 1));
    y = std::min(std::max(y, 0.0), static_cast<double>(img.height - 1));
    const long x0 = static_cast<long>(std::floor(x)), y0 = static_cast<long>(std::floor(y));
    const long x1 = std::min<long>(x0 + 1, static_cast<long>(img.width) - 1);
    const long y1 = std::min<long>(y0 + 1, static_cast<long>(img.height) - 1);
    const double ax = x - static_cast<double>(x0), ay = y - static_cast<double>(y0);
    auto p = [&](long xx, long yy) { return static_cast<double>(img.at(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy), c)); };
    return (1 - ax) * (1 - ay) * p(x0, y0) + ax * (1 - ay) * p(x1, y0) + (1 - ax) * ay * p(x0, y1) + ax * ay * p(x1, y1);
}

// Centroid of the darkest pixels (pupil) of one channel of a crop.
std::pair<double, double> pupil_centroid(const nn::Tensor<float>& crop) {
    const std::size_t E = crop.dim(1);
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t y = 0; y < E; ++y)
        for (std::size_t x = 0; x < E; ++x) {
            const double v = crop[y * E + x] + 0.5;
            const double w = std::max(0.0, 0.15 - v);
            sw += w;
            sx += w * (static_cast<double>(x) + 0.5);
            sy += w * (static_cast<double>(y) + 0.5);
        }
    return {sx / sw, sy / sw};
}

}  // namespace

// ---------------------------------------------------------------- manifest

TEST(Manifest, FormatParseRoundTripIsLossless) {
    Manifest m;
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        FrameRecord r = make_record(i, rng.uniform(-3, 3), rng.uniform(-12, -1));
        for (auto& v : r.landmarks) v = static_cast<float>(rng.uniform());
        r.split = static_cast<Split>(i % 3);
        if (i % 5 == 0) r.left_crop.clear();
        if (i % 11 == 0) r.right_crop.clear();
        m.records.push_back(r);
    }
    m.seal();
    const Manifest back = parse_manifest(format_manifest(m));
    EXPECT_EQ(back, m);
    const auto c = back.counts();
    EXPECT_EQ(c[0] + c[1] + c[2], back.records.size());
}

TEST(Manifest, MissingCropEncodedAsDash) {
    Manifest m;
    m.records.push_back(make_record(1, 0.5, -2.0));
    m.records[0].left_crop.clear();
    m.seal();
    const std::string text = format_manifest(m);
    EXPECT_NE(text.find("\t-\n"), std::string::npos);
    EXPECT_FALSE(parse_manifest(text).records[0].has_left());
}

TEST(Manifest, HeaderCarriesVersionAndFingerprint) {
    Manifest m;
    m.records.push_back(make_record(1, 0.5, -2.0));
    m.seal();
    const std::string text = format_manifest(m);
    EXPECT_EQ(text.rfind("#gazeforge-manifest", 0), 0u);
    EXPECT_NE(text.find("version=1"), std::string::npos);
    EXPECT_NE(text.find(to_hex(m.fingerprint)), std::string::npos);
}

TEST(Manifest, TamperedRecordFailsFingerprint) {
    Manifest m;
    for (int i = 0; i < 4; ++i) m.records.push_back(make_record(i, i, -2.0));
    m.seal();
    std::string text = format_manifest(m);
    const auto pos = text.find("\ttrain\t");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 7, "\ttest\t");
    EXPECT_THROW(parse_manifest(text), DataError);
}

TEST(Manifest, MalformedRecordsAreDataErrors) {
    Manifest m;
    m.records.push_back(make_record(1, 0.5, -2.0));
    m.seal();
    std::string text = format_manifest(m);
    EXPECT_THROW(parse_manifest(text.substr(0, text.size() - 6)), DataError);
    EXPECT_THROW(parse_manifest("not a manifest\n"), DataError);
}

TEST(Manifest, FileRoundTrip) {
    ScratchDir dir("manifest");
    Manifest m;
    for (int i = 0; i < 10; ++i) m.records.push_back(make_record(i, i * 0.1, -3.0));
    m.seal();
    write_manifest(dir / "m.tsv", m);
    EXPECT_EQ(read_manifest(dir / "m.tsv"), m);
    EXPECT_THROW(read_manifest(dir / "absent.tsv"), DataError);
}

// ---------------------------------------------------------------- split

TEST(Split, FractionsWithinTwoPercentOnTenThousandFrames) {
    for (std::uint64_t seed : {0ull, 1ull, 2ull, 17ull, 12345ull}) {
        auto recs = grid_records();
        split_by_gaze_point(recs, {}, seed);
        std::array<double, 3> n{};
        for (const auto& r : recs) n[static_cast<int>(r.split)] += 1;
        EXPECT_NEAR(n[0] / 100.0, 80.0, 2.0) << "seed " << seed;
        EXPECT_NEAR(n[1] / 100.0, 8.0, 2.0) << "seed " << seed;
        EXPECT_NEAR(n[2] / 100.0, 12.0, 2.0) << "seed " << seed;
    }
}

TEST(Split, NoKeySpansSplitsForEitherMethod) {
    for (auto method : {SplitMethod::quota, SplitMethod::independent}) {
        Manifest m;
        m.records = grid_records();
        // Nearby values that round to the same 0.01 cm key.
        m.records[1].gaze_x = m.records[201].gaze_x + 0.001;
        m.records[1].gaze_y = m.records[201].gaze_y;
        split_by_gaze_point(m.records, {}, 9, method);
        EXPECT_TRUE(keys_spanning_splits(m).empty());
        EXPECT_EQ(m.records[1].split, m.records[201].split);
    }
}

TEST(Split, IdenticalPointsShareSplitAndSplitIgnoresFrameIdentity) {
    std::vector<FrameRecord> a = grid_records();
    std::vector<FrameRecord> b = a;
    for (auto& r : b) r.frame_id += "_renamed";
    split_by_gaze_point(a, {}, 4);
    split_by_gaze_point(b, {}, 4);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i].split, b[i].split);
}

TEST(Split, IndependentMethodIsAPureFunctionOfThePoint) {
    const GazeKey k = gaze_key(1.234, -5.678);
    EXPECT_EQ(k, (GazeKey{123, -568}));
    EXPECT_EQ(split_for_key(k, 3, {}), split_for_key(k, 3, {}));
    std::array<int, 3> n{};
    for (int i = 0; i < 20000; ++i) ++n[static_cast<int>(split_for_key({i, -i}, 8, {}))];
    EXPECT_NEAR(n[0] / 200.0, 80.0, 1.5);
    EXPECT_NEAR(n[1] / 200.0, 8.0, 1.0);
}

TEST(Split, RatiosMustSumToHundred) {
    auto recs = grid_records();
    EXPECT_THROW(split_by_gaze_point(recs, {80, 8, 10}, 0), ConfigError);
    EXPECT_THROW(split_by_gaze_point(recs, {110, -2, -8}, 0), ConfigError);
    EXPECT_NO_THROW(split_by_gaze_point(recs, {100, 0, 0}, 0));
    for (const auto& r : recs) EXPECT_EQ(r.split, Split::train);
}

// ---------------------------------------------------------------- images and crops

TEST(Image, JpegRoundTripOfConstantImage) {
    const Image img = constant_image(24, 16, 200, 100, 30);
    const Image back = decode_jpeg(encode_jpeg(img, 95));
    ASSERT_EQ(back.width, 24u);
    ASSERT_EQ(back.height, 16u);
    for (std::size_t i = 0; i < back.rgb.size(); ++i) EXPECT_NEAR(back.rgb[i], img.rgb[i], 3);
}

TEST(Image, CorruptJpegIsDataError) {
    EXPECT_THROW(decode_jpeg("definitely not a jpeg"), DataError);
    std::string bytes = encode_jpeg(constant_image(8, 8, 1, 2, 3));
    EXPECT_THROW(decode_jpeg(std::string_view(bytes).substr(0, 20)), DataError);
}

TEST(Image, BilinearMatchesDirectOracle) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Image img = random_image(9 + rng.below(10), 7 + rng.below(10), rng);
        const double x0 = rng.uniform(-1, 3), y0 = rng.uniform(-1, 3);
        const double x1 = x0 + rng.uniform(2, 8), y1 = y0 + rng.uniform(2, 8);
        const std::size_t E = 5 + rng.below(12);
        const auto t = resample_bilinear(img, x0, y0, x1, y1, E);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t j = 0; j < E; ++j)
                for (std::size_t i = 0; i < E; ++i) {
                    const double sx = x0 + (i + 0.5) * (x1 - x0) / E - 0.5;
                    const double sy = y0 + (j + 0.5) * (y1 - y0) / E - 0.5;
                    ASSERT_NEAR(t[(c * E + j) * E + i], oracle_bilinear(img, sx, sy, c) / 255.0, 1e-6);
                }
    }
}

TEST(Image, TwoTimesUpscaleOfCheckerboardHitsNeighbourMeans) {
    const std::size_t S = 8;
    Image img{S, S, std::vector<std::uint8_t>(S * S * 3)};
    for (std::size_t y = 0; y < S; ++y)
        for (std::size_t x = 0; x < S; ++x)
            for (std::size_t c = 0; c < 3; ++c) img.rgb[(y * S + x) * 3 + c] = ((x + y) % 2) ? 255 : 0;
    // Sample grid shifted by a quarter pixel so output samples land on source pixels
    // (even indices) and on midpoints between them (odd indices).
    const std::size_t E = 2 * S;
    const auto t = resample_bilinear(img, 0.25, 0.25, 0.25 + S, 0.25 + S, E);
    for (std::size_t j = 0; j + 1 < E; j += 2) {
        for (std::size_t i = 0; i + 2 < E; ++i) {
            const double v = t[j * E + i] * 255.0;
            const std::size_t sx = i / 2, sy = j / 2;
            if (i % 2 == 0) {
                EXPECT_NEAR(v, img.at(sx, sy, 0), 1e-3);
            } else {
                EXPECT_NEAR(v, 0.5 * (img.at(sx, sy, 0) + img.at(sx + 1, sy, 0)), 1e-3);
            }
        }
    }
}

TEST(EyeCrop, FullFrameBoxGivesUnitLandmarks) {
    const Image img = constant_image(40, 40, 10, 20, 30);
    const EyeCrop c = extract_eye_crop(img, {0, 0, 40, 40}, 16);
    EXPECT_EQ(c.pixels.shape(), (nn::Shape{3, 16, 16}));
    EXPECT_EQ(c.corners, (std::array<float, 4>{0, 0, 1, 1}));
}

TEST(EyeCrop, ConstantFrameGivesConstantCrop) {
    const Image img = constant_image(50, 30, 51, 102, 255);
    const EyeCrop c = extract_eye_crop(img, {10, 5, 12, 8});
    EXPECT_EQ(c.pixels.shape(), (nn::Shape{3, 128, 128}));
    const float expect[3] = {51 / 255.f - 0.5f, 102 / 255.f - 0.5f, 0.5f};
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t p = 0; p < 128 * 128; ++p) ASSERT_NEAR(c.pixels[ch * 128 * 128 + p], expect[ch], 1e-6);
}

TEST(EyeCrop, SquareAroundBoxCentreAndClampedAtEdges) {
    const Image img = constant_image(100, 50, 0, 0, 0);
    const EyeCrop c = extract_eye_crop(img, {40, 20, 20, 10}, 8);
    EXPECT_NEAR(c.corners[0], 0.40, 1e-6);
    EXPECT_NEAR(c.corners[1], 15.0 / 50, 1e-6);
    EXPECT_NEAR(c.corners[2], 0.60, 1e-6);
    EXPECT_NEAR(c.corners[3], 35.0 / 50, 1e-6);
    const EyeCrop edge = extract_eye_crop(img, {90, -5, 20, 20}, 8);
    EXPECT_NEAR(edge.corners[0], 0.9, 1e-6);
    EXPECT_NEAR(edge.corners[1], 0.0, 1e-6);
    EXPECT_NEAR(edge.corners[2], 1.0, 1e-6);
    EXPECT_GE(edge.corners[3], edge.corners[1]);
}

TEST(EyeCrop, DegenerateBoxRejected) {
    const Image img = constant_image(20, 20, 0, 0, 0);
    EXPECT_THROW(extract_eye_crop(img, {5, 5, 0, 4}), DataError);
    EXPECT_THROW(extract_eye_crop(img, {5, 5, 4, -1}), DataError);
    EXPECT_THROW(extract_eye_crop(img, {50, 50, 4, 4}), DataError);
}

TEST(CropStore, TensorAndJpegFilesRoundTrip) {
    ScratchDir dir("crops");
    Rng rng(2);
    EyePair p{gazeforge::testing::random_tensor<float>({3, 8, 8}, rng, -0.5, 0.5),
              gazeforge::testing::random_tensor<float>({3, 8, 8}, rng, -0.5, 0.5)};
    write_eye_pair(dir / "a/f.gze", p);
    FrameRecord r = make_record(0, 0, 0);
    r.right_crop = r.left_crop = "a/f.gze";
    const EyePair back = FileCropStore(dir.path(), 8).load(r);
    EXPECT_EQ(back.right, p.right);
    EXPECT_EQ(back.left, p.left);

    nn::Tensor<float> flat(nn::Shape{3, 8, 8}, 0.25f);
    io::write_file_atomic(dir / "a/r.jpg", encode_crop_jpeg(flat));
    r.right_crop = "a/r.jpg";
    r.left_crop.clear();
    const EyePair j = FileCropStore(dir.path(), 8).load(r);
    ASSERT_EQ(j.right.shape(), (nn::Shape{3, 8, 8}));
    EXPECT_TRUE(j.left.empty());
    for (float v : j.right.values()) EXPECT_NEAR(v, 0.25f, 3.0 / 255);
}

// ---------------------------------------------------------------- synthetic generator

TEST(Synthetic, CentreGazeWithoutBiasCentresTheIris) {
    SyntheticConfig cfg;
    cfg.extent = 64;
    cfg.noise = 0;
    SyntheticSubject s = make_subject(cfg, 0);
    s.bias_x = s.bias_y = 0;
    const auto [ix, iy] = iris_center_px(cfg.screen, 64, cfg.screen.center_x(), cfg.screen.center_y());
    EXPECT_DOUBLE_EQ(ix, 32.0);
    EXPECT_DOUBLE_EQ(iy, 32.0);
    const RenderedPair rp = render_eye_pair(cfg, s, 0.0, -6.6, 0);
    const auto [cx, cy] = pupil_centroid(rp.crops.right);
    EXPECT_NEAR(cx, 32.0, 0.1);
    EXPECT_NEAR(cy, 32.0, 0.1);
}

TEST(Synthetic, BiasShiftsIrisByAffinePixelOffset) {
    SyntheticConfig cfg;
    cfg.extent = 64;
    cfg.noise = 0;
    SyntheticSubject a = make_subject(cfg, 0), b = a;
    a.bias_x = a.bias_y = 0;
    b.bias_x = 1.5;
    b.bias_y = 0;
    for (auto [gx, gy] : {std::pair{0.0, -6.6}, std::pair{-1.0, -4.0}, std::pair{1.2, -9.0}}) {
        const auto ca = pupil_centroid(render_eye_pair(cfg, a, gx, gy, 3).crops.right);
        const auto cb = pupil_centroid(render_eye_pair(cfg, b, gx, gy, 3).crops.right);
        // Half-width 3.15 cm sweeps 0.2 of the extent.
        EXPECT_NEAR(cb.first - ca.first, 0.2 * 64 / 3.15 * 1.5, 0.1);
        EXPECT_NEAR(cb.second - ca.second, 0.0, 0.1);
    }
}

TEST(Synthetic, LeftEyeIsHorizontalMirror) {
    SyntheticConfig cfg;
    cfg.extent = 48;
    cfg.noise = 0;
    const SyntheticSubject s = make_subject(cfg, 1);
    const RenderedPair rp = render_eye_pair(cfg, s, 1.0, -3.0, 5);
    const auto r = pupil_centroid(rp.crops.right);
    const auto l = pupil_centroid(rp.crops.left);
    EXPECT_NEAR(l.first, 48.0 - r.first, 0.05);
    EXPECT_NEAR(l.second, r.second, 0.05);
    EXPECT_NEAR(r.first, rp.iris_x, 0.1);
    EXPECT_NEAR(r.second, rp.iris_y, 0.1);
}

TEST(Synthetic, AffineFitFromIrisCentreRecoversGeneratorMap) {
    SyntheticConfig cfg;
    cfg.subjects = 2;
    cfg.frames_per_subject = 40;
    cfg.extent = 32;
    cfg.noise = 0;
    const SyntheticDataset ds = generate_synthetic_dataset(cfg);
    // Least squares for gaze = A * [ix, iy, 1] per coordinate via normal equations.
    double M[3][3] = {}, bx[3] = {}, by[3] = {};
    for (std::size_t i = 0; i < ds.manifest.records.size(); ++i) {
        const double f[3] = {ds.iris_px[i].first, ds.iris_px[i].second, 1.0};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) M[a][b] += f[a] * f[b];
            bx[a] += f[a] * ds.manifest.records[i].gaze_x;
            by[a] += f[a] * ds.manifest.records[i].gaze_y;
        }
    }
    auto solve = [&](double rhs[3]) {
        double A[3][4];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) A[a][b] = M[a][b];
            A[a][3] = rhs[a];
        }
        for (int c = 0; c < 3; ++c) {
            int p = c;
            for (int r = c + 1; r < 3; ++r)
                if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
            std::swap(A[c], A[p]);
            for (int r = 0; r < 3; ++r) {
                if (r == c) continue;
                const double k = A[r][c] / A[c][c];
                for (int q = c; q < 4; ++q) A[r][q] -= k * A[c][q];
            }
        }
        return std::array<double, 3>{A[0][3] / A[0][0], A[1][3] / A[1][1], A[2][3] / A[2][2]};
    };
    const auto ax = solve(bx), ay = solve(by);
    // Inverse of the render map: ix = E/2 + 0.2 E / 3.15 (gx - 0), iy = E/2 - 0.2 E / 5.6 (gy + 6.6).
    const double E = 32;
    EXPECT_NEAR(ax[0], 3.15 / (0.2 * E), 1e-6);
    EXPECT_NEAR(ax[1], 0.0, 1e-6);
    EXPECT_NEAR(ax[2], -3.15 / (0.2 * E) * E / 2, 1e-6);
    EXPECT_NEAR(ay[0], 0.0, 1e-6);
    EXPECT_NEAR(ay[1], -5.6 / (0.2 * E), 1e-6);
    EXPECT_NEAR(ay[2], 5.6 / (0.2 * E) * E / 2 - 6.6, 1e-6);
}

TEST(Synthetic, SameSeedGivesIdenticalBytesInMemoryOrStreamed) {
    SyntheticConfig cfg;
    cfg.subjects = 3;
    cfg.frames_per_subject = 6;
    cfg.extent = 16;
    cfg.bias_max = 2.0;
    ScratchDir a("syn_a"), b("syn_b");
    write_synthetic_dataset(a.path(), generate_synthetic_dataset(cfg));
    write_synthetic_to_disk(cfg, b.path());
    std::size_t files = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
        if (!e.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(e.path(), a.path());
        EXPECT_EQ(io::read_file(e.path()), io::read_file(b.path() / rel)) << rel;
        ++files;
    }
    EXPECT_EQ(files, 19u);
    cfg.seed = 2;
    EXPECT_NE(generate_synthetic_dataset(cfg).manifest.fingerprint, read_manifest(a / "manifest.tsv").fingerprint);
}

TEST(Synthetic, RecordsSatisfyFrameInvariants) {
    SyntheticConfig cfg;
    cfg.subjects = 3;
    cfg.frames_per_subject = 20;
    cfg.extent = 16;
    cfg.bias_min = 1.0;
    cfg.bias_max = 2.0;
    cfg.landmark_jitter = 0.05;
    const SyntheticDataset ds = generate_synthetic_dataset(cfg);
    for (const auto& s : ds.subjects) {
        const double mag = std::hypot(s.bias_x, s.bias_y);
        EXPECT_GE(mag, 1.0 - 1e-12);
        EXPECT_LE(mag, 2.0 + 1e-12);
    }
    for (const auto& r : ds.manifest.records) {
        for (int e = 0; e < 2; ++e) {
            EXPECT_GE(r.landmarks[4 * e + 2], r.landmarks[4 * e + 0]);
            EXPECT_GE(r.landmarks[4 * e + 3], r.landmarks[4 * e + 1]);
        }
        // Right-eye box lies on the image's left half, left-eye box on the right half.
        EXPECT_LT(r.landmarks[0], r.landmarks[4]);
        for (float v : r.landmarks) {
            EXPECT_GE(v, 0.f);
            EXPECT_LE(v, 1.f);
        }
        EXPECT_GE(r.gaze_x, cfg.screen.x_min);
        EXPECT_LE(r.gaze_x, cfg.screen.x_max);
        const EyePair p = ds.store.load(r);
        EXPECT_EQ(p.right.shape(), (nn::Shape{3, 16, 16}));
        for (float v : p.right.values()) ASSERT_TRUE(v >= -0.5f && v <= 0.5f);
    }
    EXPECT_TRUE(keys_spanning_splits(ds.manifest).empty());
}

// ---------------------------------------------------------------- batches

TEST(Batches, ThousandFramesInBatchesOf256) {
    Manifest m;
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) m.records.push_back(make_record(i, rng.uniform(), rng.uniform()));
    BatchOptions o;
    o.seed = 5;
    const auto batches = make_batches(m, Split::train, o, 0);
    std::vector<std::size_t> sizes;
    std::set<std::size_t> seen;
    for (const auto& b : batches) {
        sizes.push_back(b.records.size());
        for (auto i : b.records) EXPECT_TRUE(seen.insert(i).second);
    }
    EXPECT_EQ(sizes, (std::vector<std::size_t>{256, 256, 256, 232}));
    EXPECT_EQ(seen.size(), 1000u);

    const auto again = make_batches(m, Split::train, o, 0);
    for (std::size_t b = 0; b < batches.size(); ++b) EXPECT_EQ(batches[b].records, again[b].records);
    const auto next = make_batches(m, Split::train, o, 1);
    EXPECT_NE(batches[0].records, next[0].records);
    EXPECT_THROW(make_batches(m, Split::val, o, 0), DataError);
}

TEST(Batches, OneEyeCarriesSelectionBitsAndFallsBackToPresentEye) {
    Manifest m;
    for (int i = 0; i < 40; ++i) m.records.push_back(make_record(i, i, 0));
    m.records[3].right_crop.clear();
    m.records[4].left_crop.clear();
    BatchOptions o;
    o.batch_size = 16;
    o.eye_mode = model::EyeMode::one_eye;
    const auto batches = make_batches(m, Split::train, o, 0);
    std::size_t total = 0;
    for (const auto& b : batches) {
        ASSERT_EQ(b.eyes.size(), b.records.size());
        for (std::size_t k = 0; k < b.records.size(); ++k) {
            const auto& r = m.records[b.records[k]];
            if (b.records[k] == 3) EXPECT_EQ(b.eyes[k], Eye::left);
            else if (b.records[k] == 4) EXPECT_EQ(b.eyes[k], Eye::right);
            else EXPECT_EQ(b.eyes[k], select_eye_for_frame(r.subject_id, r.frame_id, o.seed));
        }
        total += b.records.size();
    }
    EXPECT_EQ(total, 40u);
    o.eye_mode = model::EyeMode::two_eye;
    std::size_t two = 0;
    for (const auto& b : make_batches(m, Split::train, o, 0)) two += b.records.size();
    EXPECT_EQ(two, 38u);
}

TEST(Batches, AssembleBatchPlacesCropsLandmarksAndTargets) {
    SyntheticConfig cfg;
    cfg.subjects = 1;
    cfg.frames_per_subject = 6;
    cfg.extent = 8;
    cfg.ratios = {100, 0, 0};
    const SyntheticDataset ds = generate_synthetic_dataset(cfg);
    BatchPlan plan{{4, 1}, {}};
    const Batch b = assemble_batch(ds.manifest, ds.store, plan, model::EyeMode::two_eye);
    ASSERT_EQ(b.images.size(), 2u);
    EXPECT_EQ(b.images[0].shape(), (nn::Shape{2, 3, 8, 8}));
    const EyePair p4 = ds.store.load(ds.manifest.records[4]);
    EXPECT_TRUE(std::equal(p4.left.values().begin(), p4.left.values().end(), b.images[1].data()));
    EXPECT_EQ(b.landmarks.shape(), (nn::Shape{2, 8}));
    EXPECT_FLOAT_EQ(b.targets[2], static_cast<float>(ds.manifest.records[1].gaze_x));

    plan.eyes = {Eye::left, Eye::right};
    const Batch o = assemble_batch(ds.manifest, ds.store, plan, model::EyeMode::one_eye);
    ASSERT_EQ(o.images.size(), 1u);
    EXPECT_TRUE(std::equal(p4.left.values().begin(), p4.left.values().end(), o.images[0].data()));
    EXPECT_EQ(o.landmarks.shape(), (nn::Shape{2, 4}));
    EXPECT_FLOAT_EQ(o.landmarks[0], ds.manifest.records[4].landmarks[4]);
    EXPECT_FLOAT_EQ(o.landmarks[4], ds.manifest.records[1].landmarks[0]);
}

TEST(EyeSelection, DeterministicFairAndSeedDecorrelated) {
    std::size_t ones = 0, agree = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string f = std::to_string(i);
        const Eye a = select_eye_for_frame("subj", f, 1);
        EXPECT_EQ(a, select_eye_for_frame("subj", f, 1));
        ones += a == Eye::left;
        agree += a == select_eye_for_frame("subj", f, 2);
    }
    EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 0.01);
    EXPECT_NEAR(static_cast<double>(agree) / n, 0.5, 0.02);
}

// ---------------------------------------------------------------- GazeCapture ingestion

namespace {

struct FixtureFrame {
    int orientation = 1;
    bool right_valid = true, left_valid = true;
    bool face_valid = true;
};

void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
    std::ofstream(p) << j.dump();
}

void write_subject(const std::filesystem::path& root, const std::string& sid, const std::string& device,
                   const std::vector<FixtureFrame>& frames) {
    const auto dir = root / sid;
    std::filesystem::create_directories(dir / "frames");
    nlohmann::json names = nlohmann::json::array(), orient = nlohmann::json::array();
    nlohmann::json face, le, re, dot;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "%05zu.jpg", i);
        names.push_back(name);
        orient.push_back(frames[i].orientation);
        face["X"].push_back(10); face["Y"].push_back(8); face["W"].push_back(40); face["H"].push_back(30);
        face["IsValid"].push_back(frames[i].face_valid ? 1 : 0);
        re["X"].push_back(4); re["Y"].push_back(6); re["W"].push_back(12); re["H"].push_back(12);
        re["IsValid"].push_back(frames[i].right_valid ? 1 : 0);
        le["X"].push_back(24); le["Y"].push_back(6); le["W"].push_back(12); le["H"].push_back(12);
        le["IsValid"].push_back(frames[i].left_valid ? 1 : 0);
        dot["XCam"].push_back(0.5 * static_cast<double>(i)); dot["YCam"].push_back(-2.0 - static_cast<double>(i));
        Image img = constant_image(64, 48, static_cast<std::uint8_t>(20 * i), 90, 160);
        io::write_file_atomic(dir / "frames" / name, encode_jpeg(img));
    }
    write_json(dir / "frames.json", names);
    write_json(dir / "screen.json", {{"Orientation", orient}});
    write_json(dir / "info.json", {{"DeviceName", device}, {"TotalFrames", frames.size()}});
    write_json(dir / "appleFace.json", face);
    write_json(dir / "appleLeftEye.json", le);
    write_json(dir / "appleRightEye.json", re);
    write_json(dir / "dotInfo.json", dot);
}

}  // namespace

TEST(GazeCapture, MissingRootIsFatalAndEmptyRootWarns) {
    ScratchDir dir("gc_empty");
    EXPECT_THROW(load_gazecapture_metadata(dir / "nope", {}), DataError);
    const RawIndex idx = load_gazecapture_metadata(dir.path(), {});
    EXPECT_TRUE(idx.frames.empty());
    EXPECT_EQ(idx.warnings.size(), 1u);
}

TEST(GazeCapture, FiltersDeviceOrientationAndEyeValidity) {
    ScratchDir dir("gc_filters");
    write_subject(dir.path(), "00002", "iPhone 6", {{}, {3}, {1, true, false}, {}, {1, false, true}, {1, true, true, false}});
    write_subject(dir.path(), "00001", "iPad Air 2", {{}, {}});
    const RawIndex both = load_gazecapture_metadata(dir.path(), {});
    ASSERT_EQ(both.frames.size(), 2u);
    EXPECT_EQ(both.frames[0].frame_id, "00000");
    EXPECT_EQ(both.frames[1].frame_id, "00003");
    EXPECT_DOUBLE_EQ(both.frames[1].gaze_x, 1.5);
    EXPECT_DOUBLE_EQ(both.frames[1].gaze_y, -5.0);
    // Eye boxes are offset by the face box.
    EXPECT_DOUBLE_EQ(both.frames[0].right.x, 14.0);
    EXPECT_DOUBLE_EQ(both.frames[0].left.x, 34.0);
    EXPECT_DOUBLE_EQ(both.frames[0].left.y, 14.0);

    GazeCaptureFilters loose;
    loose.require_both_eyes = false;
    EXPECT_EQ(load_gazecapture_metadata(dir.path(), loose).frames.size(), 4u);
    loose.phones_only = false;
    EXPECT_EQ(load_gazecapture_metadata(dir.path(), loose).frames.size(), 6u);
}

TEST(GazeCapture, CorruptMetadataSkipsSubjectWithWarning) {
    ScratchDir dir("gc_corrupt");
    write_subject(dir.path(), "00001", "iPhone 5", {{}, {}});
    write_subject(dir.path(), "00002", "iPhone 5", {{}});
    std::ofstream(dir / "00002/dotInfo.json") << "{ broken";
    write_subject(dir.path(), "00003", "iPhone 5", {{}});
    std::filesystem::remove(dir / "00003/screen.json");
    const RawIndex idx = load_gazecapture_metadata(dir.path(), {});
    EXPECT_EQ(idx.frames.size(), 2u);
    EXPECT_EQ(idx.warnings.size(), 2u);
}

TEST(GazeCapture, PreprocessWritesCropsAndDeterministicManifest) {
    ScratchDir dir("gc_pre");
    write_subject(dir / "raw", "00001", "iPhone 6", {{}, {}, {}, {1, true, false}});
    write_subject(dir / "raw", "00002", "iPhone 6", {{}, {}});
    std::ofstream(dir / "raw/00002/frames/00001.jpg") << "garbage";
    GazeCaptureFilters f;
    f.require_both_eyes = false;
    const RawIndex idx = load_gazecapture_metadata(dir / "raw", f);
    ASSERT_EQ(idx.frames.size(), 6u);
    PreprocessOptions opts;
    opts.extent = 16;
    const PreprocessResult res = preprocess_gazecapture(idx, dir / "out", opts);
    EXPECT_EQ(res.rejected, 1u);
    ASSERT_EQ(res.manifest.records.size(), 5u);
    EXPECT_EQ(read_manifest(dir / "out/manifest.tsv"), res.manifest);
    const auto& r0 = res.manifest.records[0];
    // Right box: x 14..26, y 14..26 in a 64 x 48 frame.
    EXPECT_NEAR(r0.landmarks[0], 14.0 / 64, 1e-6);
    EXPECT_NEAR(r0.landmarks[1], 14.0 / 48, 1e-6);
    EXPECT_NEAR(r0.landmarks[2], 26.0 / 64, 1e-6);
    EXPECT_NEAR(r0.landmarks[4], 34.0 / 64, 1e-6);
    EXPECT_FALSE(res.manifest.records[3].has_left());
    const EyePair p = FileCropStore(dir / "out", 16).load(r0);
    EXPECT_EQ(p.right.shape(), (nn::Shape{3, 16, 16}));
    EXPECT_NEAR(p.right[16 * 16], 90 / 255.0 - 0.5, 0.03);

    opts.jpeg_crops = true;
    const PreprocessResult jres = preprocess_gazecapture(idx, dir / "out_jpg", opts);
    ASSERT_EQ(jres.manifest.records.size(), 5u);
    EXPECT_EQ(jres.manifest.records[0].right_crop, "00001/00000_right.jpg");
    const EyePair pj = FileCropStore(dir / "out_jpg", 16).load(jres.manifest.records[0]);
    EXPECT_NEAR(pj.left[16 * 16], 90 / 255.0 - 0.5, 0.03);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(jres.manifest.records[i].split, res.manifest.records[i].split);
}
