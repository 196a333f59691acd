// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/train/trainer.hpp"

#include <charconv>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gazeforge/io/tensor_file.hpp"
#include "gazeforge/model/checkpoint.hpp"
#include "gazeforge/nn/ops.hpp"

namespace gazeforge::train {

using model::EyeMode;

void TrainConfig::validate() const {
    spec.validate();
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1 || eval_batch < 1) throw ConfigError("batch sizes must be positive");
    if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
}

std::string TrainLog::format() const {
    std::string out = "epoch\ttrain_mse\tval_mse\tlr\n";
    for (const auto& e : epochs) out += fmt::format("{}\t{}\t{}\t{}\n", e.epoch, e.train_mse, e.val_mse, e.lr);
    return out;
}

TrainLog TrainLog::parse(std::string_view text) {
    TrainLog log;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "epoch\ttrain_mse\tval_mse\tlr") throw DataError("train log lacks header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        EpochRecord r;
        std::istringstream ls(line);
        if (!(ls >> r.epoch >> r.train_mse >> r.val_mse >> r.lr)) throw DataError("bad train log line: " + line);
        log.epochs.push_back(r);
    }
    for (std::size_t i = 0; i < log.epochs.size(); ++i)
        if (log.epochs[i].val_mse < log.epochs[log.best_epoch].val_mse) log.best_epoch = i;
    return log;
}

Trainer::Trainer(const model::Assembly& assembly, model::ModelState<float>& state, AdamConfig adam, std::uint64_t seed)
    : assembly_(assembly), state_(state), adam_(state, adam), dropout_(Rng(seed).fork("dropout")) {}

double Trainer::step(const data::Batch& batch, double lr) {
    // Running statistics change during the forward pass; restore them if the step fails.
    const auto buffers = state_.buffers;
    try {
        state_.zero_grad();
        nn::Graph<float> g;
        std::vector<nn::NodeId> ids;
        for (const auto& img : batch.images) ids.push_back(g.constant(img, "image"));
        const auto nodes = model::forward_graph(assembly_, state_, g, ids, g.constant(batch.landmarks, "landmarks"),
                                                nn::Mode::train, dropout_);
        const nn::NodeId loss = nn::ops::mse_loss(g, nodes.prediction, g.constant(batch.targets, "target"));
        const double value = g.value(loss)[0];
        if (!std::isfinite(value)) throw NumericError("non-finite training loss");
        g.backward(loss);
        adam_.step(state_, lr);
        return value;
    } catch (const NumericError&) {
        state_.buffers = buffers;
        throw;
    }
}

nn::Tensor<float> targets_of(const data::Manifest& m, const std::vector<std::size_t>& records) {
    nn::Tensor<float> t(nn::Shape{records.size(), 2});
    for (std::size_t k = 0; k < records.size(); ++k) {
        t[2 * k] = static_cast<float>(m.records.at(records[k]).gaze_x);
        t[2 * k + 1] = static_cast<float>(m.records.at(records[k]).gaze_y);
    }
    return t;
}

nn::Tensor<float> predict_records(const model::Assembly& a, const model::ModelState<float>& state,
                                  const data::Manifest& m, const data::CropStore& store,
                                  const std::vector<std::size_t>& records, data::Eye eye, std::size_t batch) {
    if (batch == 0) throw ConfigError("batch size must be positive");
    nn::Tensor<float> out(nn::Shape{records.size(), 2});
    for (std::size_t s = 0; s < records.size(); s += batch) {
        data::BatchPlan plan;
        plan.records.assign(records.begin() + static_cast<std::ptrdiff_t>(s),
                            records.begin() + static_cast<std::ptrdiff_t>(std::min(records.size(), s + batch)));
        if (a.spec.eye_mode == EyeMode::one_eye) plan.eyes.assign(plan.records.size(), eye);
        const data::Batch b = data::assemble_batch(m, store, plan, a.spec.eye_mode);
        const auto pred = model::predict(a, state, b.images, b.landmarks);
        std::copy(pred.xy.values().begin(), pred.xy.values().end(), out.data() + 2 * s);
    }
    return out;
}

SplitEvaluation evaluate_split(const model::Assembly& a, const model::ModelState<float>& state, const data::Manifest& m,
                               const data::CropStore& store, data::Split split, std::size_t batch) {
    SplitEvaluation ev;
    auto metrics_for = [&](const std::vector<std::size_t>& idx, data::Eye eye) {
        return eval::compute_metrics(predict_records(a, state, m, store, idx, eye, batch), targets_of(m, idx));
    };
    std::vector<std::size_t> both, right, left;
    for (std::size_t i : m.indices(split)) {
        const auto& r = m.records[i];
        if (r.has_right() && r.has_left()) both.push_back(i);
        if (r.has_right()) right.push_back(i);
        if (r.has_left()) left.push_back(i);
    }
    const std::string name(data::to_string(split));
    if (a.spec.eye_mode == EyeMode::two_eye) {
        if (both.empty()) throw DataError("split '" + name + "' has no frames with both eyes");
        ev.overall = metrics_for(both, data::Eye::right);
        return ev;
    }
    if (right.empty() && left.empty()) throw DataError("split '" + name + "' has no eye crops");
    std::vector<eval::Metrics> parts;
    if (!right.empty()) parts.push_back(*(ev.right = metrics_for(right, data::Eye::right)));
    if (!left.empty()) parts.push_back(*(ev.left = metrics_for(left, data::Eye::left)));
    ev.overall = eval::pool(parts);
    return ev;
}

TrainResult train_model(const TrainConfig& cfg, const data::Manifest& m, const data::CropStore& store,
                        const EpochCallback& on_epoch) {
    cfg.validate();
    const model::Assembly a = model::build_assembly(cfg.spec);
    if (m.indices(data::Split::val).empty()) throw DataError("validation split is empty");
    model::ModelState<float> state =
        cfg.resume_from.empty() ? model::init_state<float>(a, cfg.seed) : model::load_checkpoint(cfg.resume_from, a);
    Trainer trainer(a, state, cfg.adam, cfg.seed);
    data::BatchOptions bopts;
    bopts.batch_size = cfg.batch_size;
    bopts.seed = cfg.seed;
    bopts.eye_mode = cfg.spec.eye_mode;
    bopts.redraw_eyes = cfg.redraw_eyes;

    TrainResult result;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_schedule(cfg.base_lr, cfg.gamma, epoch);
        const auto plans = data::make_batches(m, data::Split::train, bopts, epoch);
        double loss_sum = 0.0;
        std::size_t seen = 0;
        // Assemble the next batch while the current one trains; assembly is pure, so
        // results do not depend on timing.
        auto prepare = [&](std::size_t i) { return data::assemble_batch(m, store, plans[i], cfg.spec.eye_mode); };
        std::future<data::Batch> next = std::async(std::launch::async, prepare, 0);
        for (std::size_t i = 0; i < plans.size(); ++i) {
            data::Batch b = next.get();
            if (i + 1 < plans.size()) next = std::async(std::launch::async, prepare, i + 1);
            double loss;
            try {
                loss = trainer.step(b, lr);
            } catch (const NumericError& e) {
                if (next.valid()) next.wait();
                spdlog::error("epoch {} batch {}: {}", epoch, i, e.what());
                throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                   (cfg.checkpoint.empty() ? "" : "; last good checkpoint kept at " + cfg.checkpoint.string()));
            }
            loss_sum += loss * static_cast<double>(b.targets.dim(0));
            seen += b.targets.dim(0);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.train_mse = loss_sum / static_cast<double>(seen);
        rec.val_mse = evaluate_split(a, state, m, store, data::Split::val, cfg.eval_batch).overall.mse;
        result.log.epochs.push_back(rec);
        if (rec.val_mse < best) {
            best = rec.val_mse;
            result.log.best_epoch = epoch;
            result.best = state;
            if (!cfg.checkpoint.empty()) model::save_checkpoint(cfg.checkpoint, state);
        }
        if (!cfg.log.empty()) io::write_file_atomic(cfg.log, result.log.format());
        spdlog::info("epoch {:3d}  lr {:.6f}  train_mse {:.5f}  val_mse {:.5f}{}", epoch, lr, rec.train_mse,
                     rec.val_mse, result.log.best_epoch == epoch ? "  *" : "");
        if (on_epoch) on_epoch(rec);
    }
    if (result.best.params.empty()) throw NumericError("validation MSE never finite; no checkpoint saved");
    return result;
}

}  // namespace gazeforge::train
