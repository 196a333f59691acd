// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "gazeforge/calib/calibration.hpp"
#include "gazeforge/core/error.hpp"
#include "gazeforge/core/rng.hpp"
#include "gazeforge/data/synthetic.hpp"

using namespace gazeforge;
using namespace gazeforge::calib;

namespace {

EnsembleBank make_bank(model::EyeMode mode, std::uint64_t seed = 3) {
    std::vector<model::ModelSpec> specs;
    std::vector<model::ModelState<float>> states;
    for (auto arch : model::kArchitectures) {
        specs.push_back(model::reduced_spec(arch, mode, 16, 4));
        states.push_back(model::init_state<float>(model::build_assembly(specs.back()), seed));
    }
    return EnsembleBank(specs, states);
}

data::SyntheticDataset small_dataset(std::size_t subjects = 3, std::size_t frames = 40) {
    data::SyntheticConfig cfg;
    cfg.subjects = subjects;
    cfg.frames_per_subject = frames;
    cfg.extent = 16;
    cfg.seed = 11;
    return data::generate_synthetic_dataset(cfg);
}

// Adds a constant to every left-eye crop.
class LeftShiftStore : public data::CropStore {
public:
    explicit LeftShiftStore(const data::CropStore& base) : base_(base) {}
    data::EyePair load(const data::FrameRecord& r) const override {
        auto p = base_.load(r);
        for (auto& v : p.left.values()) v += 0.3f;
        return p;
    }

private:
    const data::CropStore& base_;
};

std::vector<std::size_t> all_records(const data::Manifest& m) {
    std::vector<std::size_t> r(m.records.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
    return r;
}

double dist(double ax, double ay, double bx, double by) { return std::hypot(ax - bx, ay - by); }

}  // namespace

TEST(CalibMode, WidthsAndBankModes) {
    EXPECT_EQ(feature_width(CalibMode::two_eye), 16u);
    EXPECT_EQ(feature_width(CalibMode::right), 16u);
    EXPECT_EQ(feature_width(CalibMode::left), 16u);
    EXPECT_EQ(feature_width(CalibMode::both), 32u);
    EXPECT_EQ(required_eye_mode(CalibMode::both), model::EyeMode::one_eye);
    EXPECT_EQ(parse_calib_mode("left"), CalibMode::left);
    EXPECT_THROW(parse_calib_mode("three"), ConfigError);
}

TEST(EnsembleBankTest, RejectsWrongOrderMixedModesAndForeignStates) {
    std::vector<model::ModelSpec> specs;
    std::vector<model::ModelState<float>> states;
    for (auto arch : model::kArchitectures) {
        specs.push_back(model::reduced_spec(arch, model::EyeMode::two_eye));
        states.push_back(model::init_state<float>(model::build_assembly(specs.back()), 1));
    }
    auto swapped = specs;
    std::swap(swapped[0], swapped[1]);
    auto swapped_states = states;
    std::swap(swapped_states[0], swapped_states[1]);
    EXPECT_THROW(EnsembleBank(swapped, swapped_states), ConfigError);
    auto mixed = specs;
    mixed[2].eye_mode = model::EyeMode::one_eye;
    EXPECT_THROW(EnsembleBank(mixed, states), ConfigError);
    auto foreign = states;
    foreign[3] = states[2];
    EXPECT_THROW(EnsembleBank(specs, foreign), ConfigError);
    EXPECT_THROW(EnsembleBank({specs.begin(), specs.begin() + 3}, {states.begin(), states.begin() + 3}), ConfigError);
    EXPECT_NO_THROW(EnsembleBank(specs, states));
}

TEST(EnsembleFeaturesTest, WidthsMatchModes) {
    const auto ds = small_dataset(1, 12);
    const auto two = make_bank(model::EyeMode::two_eye);
    const auto one = make_bank(model::EyeMode::one_eye);
    const auto recs = all_records(ds.manifest);
    EXPECT_EQ(extract_ensemble_features(two, ds.manifest, ds.store, recs, CalibMode::two_eye).features.cols, 16u);
    const auto both = extract_ensemble_features(one, ds.manifest, ds.store, recs, CalibMode::both);
    EXPECT_EQ(both.features.cols, 32u);
    EXPECT_EQ(both.features.rows, recs.size());
    EXPECT_EQ(both.base_predictions.size(), 8u);
    EXPECT_THROW(extract_ensemble_features(two, ds.manifest, ds.store, recs, CalibMode::right), ConfigError);
    EXPECT_THROW(extract_ensemble_features(one, ds.manifest, ds.store, recs, CalibMode::two_eye), ConfigError);
}

TEST(EnsembleFeaturesTest, BothIsConcatenationOfRightAndLeft) {
    const auto ds = small_dataset(1, 12);
    const auto one = make_bank(model::EyeMode::one_eye);
    const auto recs = all_records(ds.manifest);
    const auto r = extract_ensemble_features(one, ds.manifest, ds.store, recs, CalibMode::right, 5);
    const auto l = extract_ensemble_features(one, ds.manifest, ds.store, recs, CalibMode::left, 7);
    const auto b = extract_ensemble_features(one, ds.manifest, ds.store, recs, CalibMode::both);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        for (std::size_t j = 0; j < 16; ++j) {
            EXPECT_EQ(b.features(i, j), r.features(i, j));
            EXPECT_EQ(b.features(i, 16 + j), l.features(i, j));
        }
    }
}

TEST(EnsembleFeaturesTest, IdenticalFrameGivesIdenticalRows) {
    const auto ds = small_dataset(1, 8);
    const auto two = make_bank(model::EyeMode::two_eye);
    const auto f = extract_ensemble_features(two, ds.manifest, ds.store, {3, 1, 3}, CalibMode::two_eye);
    for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(f.features(0, j), f.features(2, j));
}

TEST(EnsembleFeaturesTest, RightModeReadsOnlyRightEyeData) {
    auto ds = small_dataset(1, 10);
    const auto one = make_bank(model::EyeMode::one_eye);
    const auto recs = all_records(ds.manifest);
    const auto before_r = extract_ensemble_features(one, ds.manifest, ds.store, recs, CalibMode::right);
    const auto before_l = extract_ensemble_features(one, ds.manifest, ds.store, recs, CalibMode::left);
    data::Manifest moved = ds.manifest;
    for (auto& rec : moved.records)
        for (std::size_t k = 4; k < 8; ++k) rec.landmarks[k] += 0.05f;
    const LeftShiftStore shifted(ds.store);
    const auto after_r = extract_ensemble_features(one, moved, shifted, recs, CalibMode::right);
    const auto after_l = extract_ensemble_features(one, moved, shifted, recs, CalibMode::left);
    EXPECT_EQ(after_r.features.data, before_r.features.data);
    EXPECT_NE(after_l.features.data, before_l.features.data);
}

TEST(EnsembleFeaturesTest, FramesMissingAnEyeAreSkippedPerMode) {
    auto ds = small_dataset(1, 10);
    ds.manifest.records[2].left_crop.clear();
    const auto one = make_bank(model::EyeMode::one_eye);
    const auto recs = all_records(ds.manifest);
    const auto both = extract_ensemble_features(one, ds.manifest, ds.store, recs, CalibMode::both);
    ASSERT_EQ(both.skipped, std::vector<std::size_t>{2});
    EXPECT_EQ(both.features.rows, 9u);
    const auto right = extract_ensemble_features(one, ds.manifest, ds.store, recs, CalibMode::right);
    EXPECT_TRUE(right.skipped.empty());
    EXPECT_EQ(extract_ensemble_features(one, ds.manifest, ds.store, recs, CalibMode::left).skipped.size(), 1u);
}

TEST(FitAndScore, ConstantBiasWithPerfectBaseIsRemoved) {
    // Taps that are an exact affine image of (gaze + bias): the base model is perfect
    // up to the subject's constant offset.
    Rng rng(8);
    const double bx = 1.5, by = 0.0;
    auto make = [&](std::size_t n, svr::Matrix& x, svr::Matrix& y, svr::Matrix& base) {
        x = svr::Matrix(n, 16);
        y = svr::Matrix(n, 2);
        base = svr::Matrix(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            const double gx = rng.uniform(-3, 3), gy = rng.uniform(-12, -1);
            y(i, 0) = gx;
            y(i, 1) = gy;
            base(i, 0) = gx + bx;
            base(i, 1) = gy + by;
            for (std::size_t j = 0; j < 16; ++j) x(i, j) = (j % 2 ? 0.3 : -0.7) * base(i, j % 2) + 0.1 * double(j);
        }
    };
    svr::Matrix xtr, ytr, btr, xte, yte, bte;
    make(40, xtr, ytr, btr);
    make(12, xte, yte, bte);
    svr::SvrConfig cfg;
    cfg.C = 100;
    cfg.epsilon = 0.01;
    const auto r = fit_and_score(xtr, ytr, xte, yte, {bte}, cfg);
    EXPECT_NEAR(r.uncalibrated_cm, 1.5, 1e-9);
    EXPECT_LT(r.error_cm, 0.03);
}

TEST(FitAndScore, SinglePointTrainTargetsCollapse) {
    Rng rng(2);
    svr::Matrix xtr(15, 16), ytr(15, 2), xte(6, 16), yte(6, 2);
    for (auto& v : xtr.data) v = rng.normal();
    for (auto& v : xte.data) v = rng.normal();
    for (std::size_t i = 0; i < 15; ++i) {
        ytr(i, 0) = 0.5;
        ytr(i, 1) = -4.0;
    }
    double expect = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        yte(i, 0) = rng.uniform(-3, 3);
        yte(i, 1) = rng.uniform(-12, -1);
        expect += dist(0.5, -4.0, yte(i, 0), yte(i, 1)) / 6;
    }
    svr::SvrConfig cfg;
    const auto r = fit_and_score(xtr, ytr, xte, yte, {}, cfg);
    const auto pred = svr::predict_multi(*r.model, xte);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_NEAR(pred(i, 0), 0.5, cfg.epsilon + 1e-6);
        EXPECT_NEAR(pred(i, 1), -4.0, cfg.epsilon + 1e-6);
    }
    EXPECT_NEAR(r.error_cm, expect, std::sqrt(2.0) * cfg.epsilon + 1e-6);
}

TEST(CalibrateSubject, ThresholdsMarkSubjectsIneligible) {
    const auto ds = small_dataset(1, 20);
    const auto two = make_bank(model::EyeMode::two_eye);
    const auto id = ds.manifest.subjects().front();
    Eligibility strict;
    strict.min_train = 1000;
    const auto r = calibrate_subject(two, ds.manifest, ds.store, id, CalibMode::two_eye, {}, strict);
    EXPECT_FALSE(r.eligible);
    EXPECT_FALSE(r.model.has_value());
    Eligibility lax{2, 1};
    const auto ok = calibrate_subject(two, ds.manifest, ds.store, id, CalibMode::two_eye, {}, lax);
    EXPECT_TRUE(ok.eligible);
    std::size_t train = 0, test = 0;
    for (const auto& rec : ds.manifest.records) {
        train += rec.split == data::Split::train;
        test += rec.split == data::Split::test;
    }
    EXPECT_EQ(ok.n_train, train);
    EXPECT_EQ(ok.n_test, test);
}

TEST(CalibrateSubject, FitNeverSeesTestOrValidationTargets) {
    const auto ds = small_dataset(1, 40);
    const auto two = make_bank(model::EyeMode::two_eye);
    const auto id = ds.manifest.subjects().front();
    Eligibility lax{2, 1};
    const auto a = calibrate_subject(two, ds.manifest, ds.store, id, CalibMode::two_eye, {}, lax);
    data::Manifest poisoned = ds.manifest;
    for (auto& rec : poisoned.records) {
        if (rec.split != data::Split::train) {
            rec.gaze_x += 1000.0;
            rec.gaze_y -= 1000.0;
        }
    }
    const auto b = calibrate_subject(two, poisoned, ds.store, id, CalibMode::two_eye, {}, lax);
    EXPECT_EQ(svr::serialize(a.model->x), svr::serialize(b.model->x));
    EXPECT_EQ(svr::serialize(a.model->y), svr::serialize(b.model->y));
    EXPECT_GT(b.error_cm, 1000.0);
}

TEST(CalibrationStudy, ReportAggregatesRecomputeAndRoundTrip) {
    const auto ds = small_dataset(4, 30);
    const auto two = make_bank(model::EyeMode::two_eye);
    const auto one = make_bank(model::EyeMode::one_eye);
    Eligibility elig{10, 3};
    const auto rep = run_calibration_study({&two, &one}, ds.manifest, ds.store,
                                           {CalibMode::two_eye, CalibMode::right, CalibMode::left, CalibMode::both},
                                           {}, elig);
    ASSERT_EQ(rep.sections.size(), 4u);
    for (const auto& s : rep.sections) {
        ASSERT_EQ(s.rows.size(), 4u);
        EXPECT_EQ(s.bank_fingerprints.size(), 4u);
        double weighted = 0, plain = 0;
        std::size_t frames = 0, subjects = 0;
        for (const auto& r : s.rows) {
            if (!r.eligible) continue;
            weighted += r.error_cm * r.n_test;
            plain += r.error_cm;
            frames += r.n_test;
            ++subjects;
        }
        ASSERT_GT(subjects, 0u);
        EXPECT_NEAR(s.calibrated.frame_weighted, weighted / frames, 1e-9);
        EXPECT_NEAR(s.calibrated.subject_mean, plain / subjects, 1e-9);
    }
    const std::string text = rep.format();
    const auto back = CalibrationReport::parse(text);
    EXPECT_EQ(back.format(), text);
    const auto& s = back.section(CalibMode::both);
    const auto again = aggregate(s.rows);
    EXPECT_NEAR(again.frame_weighted, s.calibrated.frame_weighted, 1e-9);
    EXPECT_NEAR(aggregate(s.rows, true).subject_mean, s.uncalibrated.subject_mean, 1e-9);
    EXPECT_NE(text.find("subject_id\tn_train\tn_test\terror_cm\n"), std::string::npos);
    EXPECT_THROW(CalibrationReport::parse("junk\n"), DataError);
}

TEST(CalibrationStudy, NoEligibleSubjectIsAnError) {
    const auto ds = small_dataset(2, 10);
    const auto two = make_bank(model::EyeMode::two_eye);
    EXPECT_THROW(run_calibration_study({&two}, ds.manifest, ds.store, {CalibMode::two_eye}, {}, {100, 100}), DataError);
    EXPECT_THROW(run_calibration_study({&two}, ds.manifest, ds.store, {CalibMode::both}, {}), ConfigError);
}

TEST(CalibrationStudy, IndependentOfWorkerCount) {
    const auto ds = small_dataset(4, 24);
    const auto two = make_bank(model::EyeMode::two_eye);
    Eligibility lax{5, 2};
    ::setenv("GAZE_FORGE_THREADS", "1", 1);
    const auto a = run_calibration_study({&two}, ds.manifest, ds.store, {CalibMode::two_eye}, {}, lax).format();
    ::setenv("GAZE_FORGE_THREADS", "4", 1);
    const auto b = run_calibration_study({&two}, ds.manifest, ds.store, {CalibMode::two_eye}, {}, lax).format();
    ::unsetenv("GAZE_FORGE_THREADS");
    EXPECT_EQ(a, b);
}
