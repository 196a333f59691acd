// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "gazeforge/data/synthetic.hpp"
#include "gazeforge/io/tensor_file.hpp"
#include "gazeforge/model/checkpoint.hpp"
#include "gazeforge/nn/ops.hpp"
#include "gazeforge/train/optimizer.hpp"
#include "gazeforge/train/trainer.hpp"
#include "oracles.hpp"

using namespace gazeforge;
using namespace gazeforge::train;
using gazeforge::testing::ScratchDir;
using model::Architecture;
using model::EyeMode;

namespace {

model::ModelState<float> toy_state(std::size_t n, float init = 0.5f) {
    model::ModelState<float> s;
    s.params.emplace("a.weight", nn::Parameter<float>(nn::Tensor<float>(nn::Shape{n}, init)));
    s.params.emplace("b.bias", nn::Parameter<float>(nn::Tensor<float>(nn::Shape{3, 2}, -init)));
    return s;
}

bool bitwise_equal(const model::ModelState<float>& a, const model::ModelState<float>& b) {
    if (a.params.size() != b.params.size() || a.buffers.size() != b.buffers.size()) return false;
    for (const auto& [k, p] : a.params) {
        const auto& q = b.params.at(k).value;
        if (std::memcmp(p.value.data(), q.data(), q.size() * sizeof(float)) != 0) return false;
    }
    for (const auto& [k, t] : a.buffers)
        if (std::memcmp(t.data(), b.buffers.at(k).data(), t.size() * sizeof(float)) != 0) return false;
    return true;
}

data::SyntheticDataset small_dataset(std::size_t subjects, std::size_t frames, std::size_t extent,
                                     data::SplitRatios ratios = {70, 15, 15}) {
    data::SyntheticConfig cfg;
    cfg.subjects = subjects;
    cfg.frames_per_subject = frames;
    cfg.extent = extent;
    cfg.ratios = ratios;
    cfg.seed = 21;
    return data::generate_synthetic_dataset(cfg);
}

}  // namespace

// ---------------------------------------------------------------- optimizer

TEST(Adam, FirstStepWithUnitGradientMovesByLr) {
    auto s = toy_state(17);
    Adam opt(s);
    for (auto& [k, p] : s.params) p.grad.fill(1.0f);
    const auto before = s;
    opt.step(s, 0.1);
    for (const auto& [k, p] : s.params)
        for (std::size_t i = 0; i < p.value.size(); ++i)
            EXPECT_NEAR(p.value[i] - before.params.at(k).value[i], -0.1 / (1.0 + 1e-8), 1e-6);
    EXPECT_EQ(opt.steps(), 1u);
}

TEST(Adam, MatchesDoublePrecisionReference) {
    Rng rng(4);
    auto s = toy_state(40);
    for (auto& [k, p] : s.params)
        for (auto& v : p.value.values()) v = static_cast<float>(rng.uniform(-1, 1));
    // Independent reference state in double precision.
    std::map<std::string, std::vector<double>> x, m, v;
    for (const auto& [k, p] : s.params) {
        x[k].assign(p.value.values().begin(), p.value.values().end());
        m[k].assign(p.value.size(), 0.0);
        v[k].assign(p.value.size(), 0.0);
    }
    Adam opt(s);
    const double lr = 0.01;
    for (int t = 1; t <= 6; ++t) {
        for (auto& [k, p] : s.params) {
            for (std::size_t i = 0; i < p.grad.size(); ++i) {
                const double g = rng.uniform(-2, 2);
                p.grad[i] = static_cast<float>(g);
                m[k][i] = 0.9 * m[k][i] + 0.1 * static_cast<float>(g);
                v[k][i] = 0.999 * v[k][i] + 0.001 * static_cast<double>(static_cast<float>(g)) * static_cast<float>(g);
                const double mh = m[k][i] / (1 - std::pow(0.9, t)), vh = v[k][i] / (1 - std::pow(0.999, t));
                x[k][i] -= lr * mh / (std::sqrt(vh) + 1e-8);
            }
        }
        opt.step(s, lr);
        for (const auto& [k, p] : s.params)
            for (std::size_t i = 0; i < p.value.size(); ++i) ASSERT_NEAR(p.value[i], x[k][i], 2e-6) << k << " t=" << t;
    }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    auto s = toy_state(9);
    const auto before = s;
    Adam opt(s);
    for (int t = 0; t < 5; ++t) opt.step(s, 0.05);
    EXPECT_TRUE(bitwise_equal(s, before));
}

TEST(Adam, ZeroLearningRateIsBitwiseNoOp) {
    Rng rng(8);
    auto s = toy_state(33);
    for (auto& [k, p] : s.params) {
        for (auto& v : p.value.values()) v = static_cast<float>(rng.uniform(-1, 1));
        for (auto& g : p.grad.values()) g = static_cast<float>(rng.uniform(-1, 1));
    }
    s.params.at("a.weight").value[0] = -0.0f;
    const auto before = s;
    Adam opt(s);
    opt.step(s, 0.0);
    EXPECT_TRUE(bitwise_equal(s, before));
    EXPECT_TRUE(std::signbit(s.params.at("a.weight").value[0]));
}

TEST(Adam, NonFiniteGradientAbortsWithName) {
    auto s = toy_state(4);
    Adam opt(s);
    s.params.at("b.bias").grad[3] = std::nanf("");
    const auto before = s;
    try {
        opt.step(s, 0.1);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("b.bias"), std::string::npos);
    }
    EXPECT_TRUE(bitwise_equal(s, before));
    EXPECT_EQ(opt.steps(), 0u);
}

TEST(LrSchedule, ExponentialDecayPerEpoch) {
    EXPECT_DOUBLE_EQ(lr_schedule(0.016, 0.95, 0), 0.016);
    EXPECT_NEAR(lr_schedule(0.016, 0.95, 1), 0.0152, 1e-15);
    EXPECT_DOUBLE_EQ(lr_schedule(0.016, 1.0, 37), 0.016);
    double expect = 0.016;
    for (int e = 0; e < 49; ++e) expect *= 0.95;
    EXPECT_NEAR(lr_schedule(0.016, 0.95, 49), expect, 1e-15);
    EXPECT_THROW(lr_schedule(0.016, 0.0, 1), ConfigError);
    EXPECT_THROW(lr_schedule(0.016, 1.5, 1), ConfigError);
}

TEST(MseLoss, HandExamplesAndMetricAgreement) {
    nn::Graph<double> g;
    const auto p = g.constant(nn::Tensor<double>(nn::Shape{1, 2}, std::vector<double>{0, 0}));
    const auto t = g.constant(nn::Tensor<double>(nn::Shape{1, 2}, std::vector<double>{3, 4}));
    EXPECT_DOUBLE_EQ(g.value(nn::ops::mse_loss(g, p, t))[0], 12.5);
    EXPECT_DOUBLE_EQ(g.value(nn::ops::mse_loss(g, t, t))[0], 0.0);
    const nn::Tensor<float> pf(nn::Shape{1, 2}, std::vector<float>{0, 0}), tf(nn::Shape{1, 2}, std::vector<float>{3, 4});
    EXPECT_DOUBLE_EQ(eval::mean_squared_error(pf, tf), 12.5);
    EXPECT_DOUBLE_EQ(eval::mean_euclidean_error(pf, tf), 5.0);
    const auto zero = eval::compute_metrics(tf, tf);
    EXPECT_EQ(zero.mse, 0.0);
    EXPECT_EQ(zero.mean_error_cm, 0.0);
}

// ---------------------------------------------------------------- trainer

TEST(Trainer, OverfitsThirtyTwoFramesAndLossFallsEarly) {
    const auto ds = small_dataset(1, 32, 16, {100, 0, 0});
    const auto spec = model::reduced_spec(Architecture::cnn, EyeMode::two_eye, 16, 4);
    const auto a = model::build_assembly(spec);
    auto st = model::init_state<float>(a, 1);
    Trainer tr(a, st, {}, 1);
    data::BatchPlan plan;
    for (std::size_t i = 0; i < 32; ++i) plan.records.push_back(i);
    const auto batch = data::assemble_batch(ds.manifest, ds.store, plan, spec.eye_mode);
    std::vector<double> losses;
    double mse = 1e9;
    for (int s = 0; s < 2000 && mse >= 0.01; ++s) {
        losses.push_back(tr.step(batch, 0.002));
        if (s >= 10 && s % 50 == 0) mse = eval::mean_squared_error(predict_records(a, st, ds.manifest, ds.store, plan.records), batch.targets);
    }
    mse = eval::mean_squared_error(predict_records(a, st, ds.manifest, ds.store, plan.records), batch.targets);
    EXPECT_LT(mse, 0.01);
    int rises = 0;
    for (int s = 1; s < 10; ++s) rises += losses[s] >= losses[s - 1];
    EXPECT_LE(rises, 2);
}

TEST(Trainer, IdenticalSeedsGiveBitwiseIdenticalStates) {
    const auto ds = small_dataset(1, 12, 8, {100, 0, 0});
    const auto spec = model::reduced_spec(Architecture::resnet, EyeMode::one_eye, 8, 4);
    const auto a = model::build_assembly(spec);
    data::BatchOptions o;
    o.batch_size = 5;
    o.eye_mode = EyeMode::one_eye;
    auto run = [&] {
        auto st = model::init_state<float>(a, 3);
        Trainer tr(a, st, {}, 3);
        for (std::size_t e = 0; e < 2; ++e)
            for (const auto& p : data::make_batches(ds.manifest, data::Split::train, o, e))
                tr.step(data::assemble_batch(ds.manifest, ds.store, p, EyeMode::one_eye), 0.01);
        return st;
    };
    EXPECT_TRUE(bitwise_equal(run(), run()));
}

TEST(Trainer, NonFiniteLossLeavesStateUntouched) {
    const auto ds = small_dataset(1, 4, 8, {100, 0, 0});
    const auto spec = model::reduced_spec(Architecture::cnn, EyeMode::two_eye, 8, 4);
    const auto a = model::build_assembly(spec);
    auto st = model::init_state<float>(a, 3);
    st.params.at("head.output.bias").value[0] = std::numeric_limits<float>::infinity();
    const auto before = st;
    Trainer tr(a, st, {}, 3);
    data::BatchPlan plan{{0, 1, 2, 3}, {}};
    EXPECT_THROW(tr.step(data::assemble_batch(ds.manifest, ds.store, plan, EyeMode::two_eye), 0.01), NumericError);
    EXPECT_TRUE(bitwise_equal(st, before));
}

TEST(TrainModel, BestCheckpointReproducesLoggedValidationMse) {
    ScratchDir dir("train");
    const auto ds = small_dataset(2, 30, 16);
    TrainConfig cfg;
    cfg.spec = model::reduced_spec(Architecture::inception, EyeMode::two_eye, 16, 4);
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.base_lr = 0.004;
    cfg.seed = 5;
    cfg.checkpoint = dir / "best.gze";
    cfg.log = dir / "train.tsv";
    std::vector<EpochRecord> seen;
    const TrainResult r = train_model(cfg, ds.manifest, ds.store, [&](const EpochRecord& e) { seen.push_back(e); });
    ASSERT_EQ(r.log.epochs.size(), 4u);
    EXPECT_EQ(seen.size(), 4u);
    for (const auto& e : r.log.epochs) EXPECT_GE(e.val_mse, r.log.best_val_mse());
    EXPECT_NEAR(r.log.epochs[3].lr, 0.004 * std::pow(0.95, 3), 1e-15);

    const auto a = model::build_assembly(cfg.spec);
    const auto loaded = model::load_checkpoint(cfg.checkpoint, a);
    EXPECT_TRUE(bitwise_equal(loaded, r.best));
    const double val = evaluate_split(a, loaded, ds.manifest, ds.store, data::Split::val).overall.mse;
    EXPECT_NEAR(val, r.log.best_val_mse(), 1e-6);

    const TrainLog parsed = TrainLog::parse(io::read_file(cfg.log));
    ASSERT_EQ(parsed.epochs.size(), 4u);
    EXPECT_EQ(parsed.best_epoch, r.log.best_epoch);
    EXPECT_EQ(parsed.format(), r.log.format());
}

TEST(TrainModel, DeterministicLogsAndCheckpoints) {
    ScratchDir dir("train_det");
    const auto ds = small_dataset(2, 20, 8);
    TrainConfig cfg;
    cfg.spec = model::reduced_spec(Architecture::inception_resnet, EyeMode::one_eye, 8, 4);
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.seed = 9;
    cfg.checkpoint = dir / "a.gze";
    const auto r1 = train_model(cfg, ds.manifest, ds.store);
    cfg.checkpoint = dir / "b.gze";
    const auto r2 = train_model(cfg, ds.manifest, ds.store);
    EXPECT_EQ(r1.log.format(), r2.log.format());
    EXPECT_EQ(io::read_file(dir / "a.gze"), io::read_file(dir / "b.gze"));
}

TEST(TrainModel, EmptyValidationSplitIsFatal) {
    const auto ds = small_dataset(1, 6, 8, {100, 0, 0});
    TrainConfig cfg;
    cfg.spec = model::reduced_spec(Architecture::cnn, EyeMode::two_eye, 8, 4);
    cfg.epochs = 1;
    EXPECT_THROW(train_model(cfg, ds.manifest, ds.store), DataError);
    cfg.epochs = 0;
    EXPECT_THROW(train_model(cfg, ds.manifest, ds.store), ConfigError);
}

// ---------------------------------------------------------------- evaluation

TEST(EvaluateSplit, ConstantPredictorMatchesBruteForce) {
    const auto ds = small_dataset(3, 20, 8);
    const auto spec = model::reduced_spec(Architecture::cnn, EyeMode::two_eye, 8, 4);
    const auto a = model::build_assembly(spec);
    auto st = model::init_state<float>(a, 2);
    double mx = 0, my = 0;
    const auto idx = ds.manifest.indices(data::Split::test);
    for (auto i : idx) {
        mx += ds.manifest.records[i].gaze_x;
        my += ds.manifest.records[i].gaze_y;
    }
    mx /= static_cast<double>(idx.size());
    my /= static_cast<double>(idx.size());
    st.params.at("head.output.weight").value.fill(0.0f);
    st.params.at("head.output.bias").value[0] = static_cast<float>(mx);
    st.params.at("head.output.bias").value[1] = static_cast<float>(my);
    const auto ev = evaluate_split(a, st, ds.manifest, ds.store, data::Split::test);
    double se = 0, eu = 0;
    for (auto i : idx) {
        const double dx = static_cast<float>(mx) - static_cast<double>(static_cast<float>(ds.manifest.records[i].gaze_x));
        const double dy = static_cast<float>(my) - static_cast<double>(static_cast<float>(ds.manifest.records[i].gaze_y));
        se += dx * dx + dy * dy;
        eu += std::sqrt(dx * dx + dy * dy);
    }
    EXPECT_EQ(ev.overall.n, idx.size());
    EXPECT_NEAR(ev.overall.mse, se / (2.0 * static_cast<double>(idx.size())), 1e-9);
    EXPECT_NEAR(ev.overall.mean_error_cm, eu / static_cast<double>(idx.size()), 1e-9);
    EXPECT_FALSE(ev.right.has_value());
}

TEST(EvaluateSplit, OneEyeReportsEachEyeSeparately) {
    const auto ds = small_dataset(2, 20, 8);
    const auto spec = model::reduced_spec(Architecture::cnn, EyeMode::one_eye, 8, 4);
    const auto a = model::build_assembly(spec);
    const auto st = model::init_state<float>(a, 2);
    const auto ev = evaluate_split(a, st, ds.manifest, ds.store, data::Split::val);
    ASSERT_TRUE(ev.right && ev.left);
    const auto idx = ds.manifest.indices(data::Split::val);
    EXPECT_EQ(ev.right->n, idx.size());
    EXPECT_EQ(ev.left->n, idx.size());
    EXPECT_EQ(ev.overall.n, 2 * idx.size());
    const auto right = eval::compute_metrics(predict_records(a, st, ds.manifest, ds.store, idx, data::Eye::right),
                                             targets_of(ds.manifest, idx));
    EXPECT_DOUBLE_EQ(ev.right->mse, right.mse);
    EXPECT_NE(ev.right->mse, ev.left->mse);
    EXPECT_NEAR(ev.overall.mse, 0.5 * (ev.right->mse + ev.left->mse), 1e-12);
}

TEST(EvaluateSplit, InvariantToEvalBatchSize) {
    const auto ds = small_dataset(2, 40, 16);
    const auto spec = model::reduced_spec(Architecture::resnet, EyeMode::two_eye, 16, 4);
    const auto a = model::build_assembly(spec);
    auto st = model::init_state<float>(a, 6);
    Rng rng(1);
    for (auto& [k, b] : st.buffers)
        for (auto& v : b.values()) v = static_cast<float>(k.ends_with("running_var") ? rng.uniform(0.5, 2) : rng.uniform(-0.3, 0.3));
    const auto e1 = evaluate_split(a, st, ds.manifest, ds.store, data::Split::train, 1);
    const auto e256 = evaluate_split(a, st, ds.manifest, ds.store, data::Split::train, 256);
    EXPECT_NEAR(e1.overall.mse, e256.overall.mse, 1e-5);
    EXPECT_NEAR(e1.overall.mean_error_cm, e256.overall.mean_error_cm, 1e-5);
}

TEST(EvaluateSplit, EmptySplitIsAnError) {
    const auto ds = small_dataset(1, 6, 8, {100, 0, 0});
    const auto a = model::build_assembly(model::reduced_spec(Architecture::cnn, EyeMode::two_eye, 8, 4));
    const auto st = model::init_state<float>(a, 2);
    EXPECT_THROW(evaluate_split(a, st, ds.manifest, ds.store, data::Split::test), DataError);
}
