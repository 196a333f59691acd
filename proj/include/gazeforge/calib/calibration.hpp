// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gazeforge/data/crops.hpp"
#include "gazeforge/data/manifest.hpp"
#include "gazeforge/model/assembly.hpp"
#include "gazeforge/svr/svr.hpp"

namespace gazeforge::calib {

enum class CalibMode { two_eye, right, left, both };

std::string_view to_string(CalibMode m) noexcept;
CalibMode parse_calib_mode(std::string_view s);

/// Eye mode of the bank a calibration mode needs: two_eye for two_eye, one_eye otherwise.
model::EyeMode required_eye_mode(CalibMode m) noexcept;
std::size_t feature_width(CalibMode m) noexcept;

/// The four trained base models of one eye mode, in the fixed order cnn, resnet,
/// inception, inception_resnet.
class EnsembleBank {
public:
    /// Throws ConfigError unless there are exactly four members in the fixed
    /// architecture order, sharing one eye mode, each state matching its spec.
    EnsembleBank(std::vector<model::ModelSpec> specs, std::vector<model::ModelState<float>> states);

    model::EyeMode eye_mode() const noexcept { return assemblies_.front().spec.eye_mode; }
    const std::vector<model::Assembly>& assemblies() const noexcept { return assemblies_; }
    const std::vector<model::ModelState<float>>& states() const noexcept { return states_; }
    /// Hex spec fingerprints, one per member.
    std::vector<std::string> fingerprints() const;

private:
    std::vector<model::Assembly> assemblies_;
    std::vector<model::ModelState<float>> states_;
};

/// Rows of concatenated taps for a set of frames.
struct EnsembleFeatures {
    std::vector<std::size_t> records;  // manifest indices of the rows, in input order
    svr::Matrix features;              // rows x 16, or rows x 32 for both
    /// Uncalibrated predictions per base predictor (rows x 2 each): one per model, or
    /// per (model, eye) in both mode with the right eye first.
    std::vector<svr::Matrix> base_predictions;
    std::vector<std::size_t> skipped;  // frames lacking a required eye
};

/// Eval-mode taps of all four models. Frames missing the eye(s) the mode needs are
/// skipped and logged.
EnsembleFeatures extract_ensemble_features(const EnsembleBank& bank, const data::Manifest& m,
                                           const data::CropStore& store, const std::vector<std::size_t>& records,
                                           CalibMode mode, std::size_t batch = 256);

struct Eligibility {
    std::size_t min_train = 10;
    std::size_t min_test = 3;
};

struct SubjectResult {
    std::string subject_id;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    bool eligible = false;
    double error_cm = 0.0;         // calibrated mean Euclidean error on test frames
    double uncalibrated_cm = 0.0;  // mean over base predictors of their test error
    std::optional<svr::MultiSvr> model;
};

/// Fits the per-subject regressor on train rows and scores it on test rows. Pure: no
/// manifest access. Requires at least 2 train rows and 1 test row.
SubjectResult fit_and_score(const svr::Matrix& train_x, const svr::Matrix& train_y, const svr::Matrix& test_x,
                            const svr::Matrix& test_y, const std::vector<svr::Matrix>& test_base,
                            const svr::SvrConfig& cfg);

/// Calibration for one subject using its train-split frames for fitting and test-split
/// frames for scoring. Below the thresholds the result is marked ineligible.
SubjectResult calibrate_subject(const EnsembleBank& bank, const data::Manifest& m, const data::CropStore& store,
                                const std::string& subject_id, CalibMode mode, const svr::SvrConfig& cfg,
                                const Eligibility& elig = {});

struct Aggregate {
    double frame_weighted = 0.0;
    double subject_mean = 0.0;
    std::size_t subjects = 0;
    std::size_t frames = 0;
};

/// Aggregates over eligible rows; `uncalibrated` picks the baseline column.
Aggregate aggregate(const std::vector<SubjectResult>& rows, bool uncalibrated = false);

struct ModeSection {
    CalibMode mode = CalibMode::two_eye;
    std::vector<std::string> bank_fingerprints;
    std::vector<SubjectResult> rows;  // sorted by subject id, ineligible included
    Aggregate calibrated;
    Aggregate uncalibrated;
};

struct CalibrationReport {
    svr::SvrConfig svr;
    Eligibility eligibility;
    std::vector<ModeSection> sections;

    const ModeSection& section(CalibMode m) const;

    /// Header (svr config, thresholds), then per mode: bank fingerprints, rows
    /// `subject_id<TAB>n_train<TAB>n_test<TAB>error_cm`, baselines, fitted models,
    /// exclusions and footer aggregates.
    std::string format() const;
    static CalibrationReport parse(std::string_view text);
};

/// Every subject of the manifest in each requested mode. Features are extracted once per
/// mode; subjects are fitted in parallel and merged in id order. `banks` must contain a
/// bank of the eye mode each requested mode needs. Throws DataError when a mode has no
/// eligible subject.
CalibrationReport run_calibration_study(const std::vector<const EnsembleBank*>& banks, const data::Manifest& m,
                                        const data::CropStore& store, const std::vector<CalibMode>& modes,
                                        const svr::SvrConfig& cfg, const Eligibility& elig = {});

}  // namespace gazeforge::calib
