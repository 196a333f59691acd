// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gazeforge/data/batches.hpp"
#include "gazeforge/data/crops.hpp"
#include "gazeforge/data/manifest.hpp"
#include "gazeforge/eval/metrics.hpp"
#include "gazeforge/model/assembly.hpp"
#include "gazeforge/train/optimizer.hpp"

namespace gazeforge::train {

struct TrainConfig {
    model::ModelSpec spec;
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    double base_lr = 0.016;
    double gamma = 0.95;
    std::uint64_t seed = 0;
    bool redraw_eyes = false;
    std::size_t eval_batch = 256;
    AdamConfig adam{};
    std::filesystem::path checkpoint;  // best-validation state; empty skips saving
    std::filesystem::path log;         // TrainLog TSV; empty skips saving
    // Warm start from this checkpoint (fresh optimizer, epochs counted from 0). Its
    // fingerprint must match `spec`.
    std::filesystem::path resume_from;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
    double lr = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;

    double best_val_mse() const { return epochs.at(best_epoch).val_mse; }
    /// Header `epoch<TAB>train_mse<TAB>val_mse<TAB>lr`, then one line per epoch.
    std::string format() const;
    static TrainLog parse(std::string_view text);
};

/// One optimizer step per call on a prepared batch; owns the optimizer state.
class Trainer {
public:
    Trainer(const model::Assembly& assembly, model::ModelState<float>& state, AdamConfig adam, std::uint64_t seed);

    /// Train-mode forward, MSE, backward, Adam. Returns the batch loss. Throws
    /// NumericError on a non-finite loss or gradient, leaving the state untouched.
    double step(const data::Batch& batch, double lr);

    const Adam& optimizer() const noexcept { return adam_; }

private:
    const model::Assembly& assembly_;
    model::ModelState<float>& state_;
    Adam adam_;
    Rng dropout_;
};

/// Eval-mode predictions for the given records (N x 2, cm) in record order. For one-eye
/// assemblies `eye` picks the crop; frames lacking it throw DataError.
nn::Tensor<float> predict_records(const model::Assembly& a, const model::ModelState<float>& state,
                                  const data::Manifest& m, const data::CropStore& store,
                                  const std::vector<std::size_t>& records, data::Eye eye = data::Eye::right,
                                  std::size_t batch = 256);

/// N x 2 gaze labels of the records.
nn::Tensor<float> targets_of(const data::Manifest& m, const std::vector<std::size_t>& records);

struct SplitEvaluation {
    eval::Metrics overall;
    // One-eye only: every frame evaluated on each eye it has.
    std::optional<eval::Metrics> right, left;
};

/// Single eval-mode pass without shuffling. Two-eye uses frames with both crops; one-eye
/// pools the right-eye and left-eye passes into `overall`. Throws DataError when empty.
SplitEvaluation evaluate_split(const model::Assembly& a, const model::ModelState<float>& state,
                               const data::Manifest& m, const data::CropStore& store, data::Split split,
                               std::size_t batch = 256);

struct TrainResult {
    model::ModelState<float> best;
    TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// The epoch loop: shuffled batches, Adam, lr decay per epoch, validation MSE after each
/// epoch, best state kept (and saved when configured). Initialization uses cfg.seed.
TrainResult train_model(const TrainConfig& cfg, const data::Manifest& m, const data::CropStore& store,
                        const EpochCallback& on_epoch = {});

}  // namespace gazeforge::train
