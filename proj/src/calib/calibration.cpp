// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/calib/calibration.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "gazeforge/core/error.hpp"
#include "gazeforge/core/parallel.hpp"
#include "gazeforge/data/batches.hpp"

namespace gazeforge::calib {

namespace {

constexpr std::string_view kMagic = "gazeforge-calibration";
constexpr std::string_view kRowHeader = "subject_id\tn_train\tn_test\terror_cm";
const std::set<std::string, std::less<>> kKeywords{"mode", "bank", "subject_id", "excluded", "baseline",
                                                   "model", "aggregate", "end", "svr", "eligibility"};

std::vector<std::string_view> fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return out;
}

double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw DataError(fmt::format("calibration report line {}: bad number '{}'", line, s));
    return v;
}

std::size_t parse_size(std::string_view s, std::size_t line) {
    std::size_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw DataError(fmt::format("calibration report line {}: bad count '{}'", line, s));
    return v;
}

double mean_error(const svr::Matrix& pred, const svr::Matrix& truth) {
    double s = 0.0;
    for (std::size_t i = 0; i < truth.rows; ++i) s += std::hypot(pred(i, 0) - truth(i, 0), pred(i, 1) - truth(i, 1));
    return s / static_cast<double>(truth.rows);
}

bool usable(const data::FrameRecord& r, CalibMode mode) {
    switch (mode) {
        case CalibMode::right: return r.has_right();
        case CalibMode::left: return r.has_left();
        default: return r.has_right() && r.has_left();
    }
}

svr::Matrix select_rows(const svr::Matrix& x, const std::vector<std::size_t>& rows) {
    svr::Matrix out(rows.size(), x.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(x.row(rows[i]), x.cols, out.data.data() + i * x.cols);
    return out;
}

svr::Matrix gaze_targets(const data::Manifest& m, const std::vector<std::size_t>& records) {
    svr::Matrix y(records.size(), 2);
    for (std::size_t i = 0; i < records.size(); ++i) {
        y(i, 0) = m.records[records[i]].gaze_x;
        y(i, 1) = m.records[records[i]].gaze_y;
    }
    return y;
}

// Fitting may only ever see train-split frames.
void assert_train_only(const data::Manifest& m, const std::vector<std::size_t>& records) {
    for (std::size_t r : records) {
        if (m.records[r].split != data::Split::train) {
            throw DataError("calibration fit input contains " + std::string(data::to_string(m.records[r].split)) +
                            " frame " + m.records[r].subject_id + "/" + m.records[r].frame_id);
        }
    }
}

// Rows of `f` split by subject into train and test positions.
struct SubjectRows {
    std::vector<std::size_t> train, test;
};

SubjectResult score_subject(const std::string& id, const data::Manifest& m, const EnsembleFeatures& f,
                            const SubjectRows& rows, const svr::SvrConfig& cfg, const Eligibility& elig) {
    SubjectResult r;
    r.subject_id = id;
    r.n_train = rows.train.size();
    r.n_test = rows.test.size();
    if (r.n_train < std::max<std::size_t>(elig.min_train, 2) || r.n_test < std::max<std::size_t>(elig.min_test, 1))
        return r;
    std::vector<std::size_t> train_records, test_records;
    for (std::size_t i : rows.train) train_records.push_back(f.records[i]);
    for (std::size_t i : rows.test) test_records.push_back(f.records[i]);
    assert_train_only(m, train_records);
    std::vector<svr::Matrix> base;
    for (const auto& b : f.base_predictions) base.push_back(select_rows(b, rows.test));
    SubjectResult scored = fit_and_score(select_rows(f.features, rows.train), gaze_targets(m, train_records),
                                         select_rows(f.features, rows.test), gaze_targets(m, test_records), base, cfg);
    scored.subject_id = id;
    return scored;
}

const EnsembleBank& bank_for(const std::vector<const EnsembleBank*>& banks, CalibMode mode) {
    for (const EnsembleBank* b : banks)
        if (b && b->eye_mode() == required_eye_mode(mode)) return *b;
    throw ConfigError("calibration mode '" + std::string(to_string(mode)) + "' needs a " +
                      std::string(model::to_string(required_eye_mode(mode))) + " bank");
}

}  // namespace

std::string_view to_string(CalibMode m) noexcept {
    switch (m) {
        case CalibMode::two_eye: return "two_eye";
        case CalibMode::right: return "right";
        case CalibMode::left: return "left";
        case CalibMode::both: return "both";
    }
    return "?";
}

CalibMode parse_calib_mode(std::string_view s) {
    for (CalibMode m : {CalibMode::two_eye, CalibMode::right, CalibMode::left, CalibMode::both})
        if (s == to_string(m)) return m;
    throw ConfigError("unknown calibration mode '" + std::string(s) + "' (expected two_eye, right, left or both)");
}

model::EyeMode required_eye_mode(CalibMode m) noexcept {
    return m == CalibMode::two_eye ? model::EyeMode::two_eye : model::EyeMode::one_eye;
}

std::size_t feature_width(CalibMode m) noexcept {
    return (m == CalibMode::both ? 2 : 1) * model::kArchitectures.size() * model::kTapWidth;
}

EnsembleBank::EnsembleBank(std::vector<model::ModelSpec> specs, std::vector<model::ModelState<float>> states) {
    const std::size_t n = model::kArchitectures.size();
    if (specs.size() != n || states.size() != n)
        throw ConfigError(fmt::format("ensemble bank needs {} models, got {}", n, specs.size()));
    for (std::size_t k = 0; k < n; ++k) {
        if (specs[k].architecture != model::kArchitectures[k]) {
            throw ConfigError(fmt::format("ensemble bank slot {} must be {}, got {}", k,
                                          model::to_string(model::kArchitectures[k]),
                                          model::to_string(specs[k].architecture)));
        }
        if (specs[k].eye_mode != specs[0].eye_mode) throw ConfigError("ensemble bank mixes eye modes");
        if (states[k].fingerprint != specs[k].fingerprint()) {
            throw ConfigError(fmt::format("ensemble bank state for {} does not match its spec",
                                          model::to_string(specs[k].architecture)));
        }
        assemblies_.push_back(model::build_assembly(specs[k]));
    }
    states_ = std::move(states);
}

std::vector<std::string> EnsembleBank::fingerprints() const {
    std::vector<std::string> out;
    for (const auto& a : assemblies_) out.push_back(to_hex(a.spec.fingerprint()));
    return out;
}

EnsembleFeatures extract_ensemble_features(const EnsembleBank& bank, const data::Manifest& m,
                                           const data::CropStore& store, const std::vector<std::size_t>& records,
                                           CalibMode mode, std::size_t batch) {
    if (bank.eye_mode() != required_eye_mode(mode)) {
        throw ConfigError("calibration mode '" + std::string(to_string(mode)) + "' cannot use a " +
                          std::string(model::to_string(bank.eye_mode())) + " bank");
    }
    if (batch == 0) throw ConfigError("batch size must be positive");
    EnsembleFeatures f;
    for (std::size_t r : records) {
        if (r >= m.records.size()) throw UsageError("record index out of range");
        if (usable(m.records[r], mode)) {
            f.records.push_back(r);
        } else {
            f.skipped.push_back(r);
            spdlog::debug("calibration: skipping {}/{} (missing eye for mode {})", m.records[r].subject_id,
                          m.records[r].frame_id, to_string(mode));
        }
    }
    if (!f.skipped.empty())
        spdlog::info("calibration {}: skipped {} frame(s) lacking a required eye", to_string(mode), f.skipped.size());

    std::vector<std::optional<data::Eye>> passes;
    switch (mode) {
        case CalibMode::two_eye: passes = {std::nullopt}; break;
        case CalibMode::right: passes = {data::Eye::right}; break;
        case CalibMode::left: passes = {data::Eye::left}; break;
        case CalibMode::both: passes = {data::Eye::right, data::Eye::left}; break;
    }
    const std::size_t n = f.records.size(), models = bank.assemblies().size(), tap = model::kTapWidth;
    f.features = svr::Matrix(n, feature_width(mode));
    f.base_predictions.assign(passes.size() * models, svr::Matrix(n, 2));
    for (std::size_t s = 0; s < n; s += batch) {
        const std::size_t e = std::min(n, s + batch);
        for (std::size_t p = 0; p < passes.size(); ++p) {
            data::BatchPlan plan;
            plan.records.assign(f.records.begin() + static_cast<std::ptrdiff_t>(s),
                                f.records.begin() + static_cast<std::ptrdiff_t>(e));
            if (passes[p]) plan.eyes.assign(plan.records.size(), *passes[p]);
            const data::Batch b = data::assemble_batch(m, store, plan, bank.eye_mode());
            for (std::size_t k = 0; k < models; ++k) {
                const auto pred = model::predict(bank.assemblies()[k], bank.states()[k], b.images, b.landmarks);
                svr::Matrix& base = f.base_predictions[p * models + k];
                for (std::size_t i = s; i < e; ++i) {
                    for (std::size_t j = 0; j < tap; ++j)
                        f.features(i, (p * models + k) * tap + j) = pred.tap.data()[(i - s) * tap + j];
                    base(i, 0) = pred.xy.data()[(i - s) * 2];
                    base(i, 1) = pred.xy.data()[(i - s) * 2 + 1];
                }
            }
        }
    }
    return f;
}

SubjectResult fit_and_score(const svr::Matrix& train_x, const svr::Matrix& train_y, const svr::Matrix& test_x,
                            const svr::Matrix& test_y, const std::vector<svr::Matrix>& test_base,
                            const svr::SvrConfig& cfg) {
    if (train_y.cols != 2 || test_y.cols != 2) throw UsageError("calibration targets must be N x 2");
    if (test_x.rows == 0 || test_x.rows != test_y.rows) throw UsageError("calibration needs matching test rows");
    SubjectResult r;
    r.n_train = train_x.rows;
    r.n_test = test_x.rows;
    r.model = svr::fit_multi(train_x, train_y, cfg);
    r.error_cm = mean_error(svr::predict_multi(*r.model, test_x), test_y);
    double base = 0.0;
    for (const auto& p : test_base) {
        if (p.rows != test_y.rows) throw UsageError("base prediction rows differ from test rows");
        base += mean_error(p, test_y);
    }
    r.uncalibrated_cm = test_base.empty() ? 0.0 : base / static_cast<double>(test_base.size());
    r.eligible = true;
    return r;
}

SubjectResult calibrate_subject(const EnsembleBank& bank, const data::Manifest& m, const data::CropStore& store,
                                const std::string& subject_id, CalibMode mode, const svr::SvrConfig& cfg,
                                const Eligibility& elig) {
    cfg.validate();
    std::vector<std::size_t> records;
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        const auto& r = m.records[i];
        if (r.subject_id == subject_id && r.split != data::Split::val) records.push_back(i);
    }
    const EnsembleFeatures f = extract_ensemble_features(bank, m, store, records, mode);
    SubjectRows rows;
    for (std::size_t i = 0; i < f.records.size(); ++i)
        (m.records[f.records[i]].split == data::Split::train ? rows.train : rows.test).push_back(i);
    return score_subject(subject_id, m, f, rows, cfg, elig);
}

Aggregate aggregate(const std::vector<SubjectResult>& rows, bool uncalibrated) {
    Aggregate a;
    double weighted = 0.0, plain = 0.0;
    for (const auto& r : rows) {
        if (!r.eligible) continue;
        const double e = uncalibrated ? r.uncalibrated_cm : r.error_cm;
        weighted += e * static_cast<double>(r.n_test);
        plain += e;
        a.frames += r.n_test;
        ++a.subjects;
    }
    if (a.subjects > 0) {
        a.frame_weighted = weighted / static_cast<double>(a.frames);
        a.subject_mean = plain / static_cast<double>(a.subjects);
    }
    return a;
}

const ModeSection& CalibrationReport::section(CalibMode m) const {
    for (const auto& s : sections)
        if (s.mode == m) return s;
    throw UsageError("calibration report has no '" + std::string(to_string(m)) + "' section");
}

std::string CalibrationReport::format() const {
    std::string out = fmt::format("{}\t1\n", kMagic);
    out += fmt::format("svr\tkernel={} C={} epsilon={} gamma={} scaling={} tolerance={} max_iterations={}\n",
                       svr::to_string(svr.kernel), svr.C, svr.epsilon, svr.gamma, svr::to_string(svr.scaling),
                       svr.tolerance, svr.max_iterations);
    out += fmt::format("eligibility\tmin_train={}\tmin_test={}\n", eligibility.min_train, eligibility.min_test);
    for (const auto& s : sections) {
        out += fmt::format("mode\t{}\n", to_string(s.mode));
        for (std::size_t k = 0; k < s.bank_fingerprints.size(); ++k)
            out += fmt::format("bank\t{}\t{}\n", model::to_string(model::kArchitectures[k]), s.bank_fingerprints[k]);
        out += std::string(kRowHeader) + "\n";
        for (const auto& r : s.rows) {
            if (kKeywords.count(r.subject_id)) throw UsageError("subject id '" + r.subject_id + "' is reserved");
            if (r.eligible) out += fmt::format("{}\t{}\t{}\t{}\n", r.subject_id, r.n_train, r.n_test, r.error_cm);
        }
        for (const auto& r : s.rows)
            if (!r.eligible) out += fmt::format("excluded\t{}\t{}\t{}\n", r.subject_id, r.n_train, r.n_test);
        for (const auto& r : s.rows)
            if (r.eligible) out += fmt::format("baseline\t{}\t{}\n", r.subject_id, r.uncalibrated_cm);
        for (const auto& r : s.rows) {
            if (!r.model) continue;
            out += fmt::format("model\t{}\tx\t{}\n", r.subject_id, svr::serialize(r.model->x));
            out += fmt::format("model\t{}\ty\t{}\n", r.subject_id, svr::serialize(r.model->y));
        }
        for (const auto& [name, a] : {std::pair{"calibrated", s.calibrated}, std::pair{"uncalibrated", s.uncalibrated}}) {
            out += fmt::format("aggregate\t{}\tframe_weighted\t{}\n", name, a.frame_weighted);
            out += fmt::format("aggregate\t{}\tsubject_mean\t{}\n", name, a.subject_mean);
        }
        out += fmt::format("aggregate\tcounts\t{}\t{}\n", s.calibrated.subjects, s.calibrated.frames);
        out += fmt::format("end\t{}\n", to_string(s.mode));
    }
    return out;
}

CalibrationReport CalibrationReport::parse(std::string_view text) {
    CalibrationReport rep;
    ModeSection* cur = nullptr;
    std::map<std::string, std::size_t> row_of;
    std::size_t line_no = 0, start = 0;
    bool saw_magic = false;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string_view line = text.substr(start, nl - start);
        start = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto f = fields(line);
        auto need = [&](std::size_t n) {
            if (f.size() != n) throw DataError(fmt::format("calibration report line {}: expected {} fields", line_no, n));
        };
        auto in_section = [&] {
            if (!cur) throw DataError(fmt::format("calibration report line {}: outside a mode section", line_no));
        };
        if (!saw_magic) {
            if (f.size() != 2 || f[0] != kMagic || f[1] != "1") throw DataError("not a calibration report");
            saw_magic = true;
            continue;
        }
        const std::string_view key = f[0];
        if (key == "svr") {
            need(2);
            std::map<std::string, std::string, std::less<>> kv;
            std::size_t s = 0;
            const std::string_view body = f[1];
            while (s < body.size()) {
                auto sp = body.find(' ', s);
                if (sp == std::string_view::npos) sp = body.size();
                const auto tok = body.substr(s, sp - s);
                const auto eq = tok.find('=');
                if (eq == std::string_view::npos) throw DataError("bad svr token in calibration report");
                kv[std::string(tok.substr(0, eq))] = std::string(tok.substr(eq + 1));
                s = sp + 1;
            }
            auto get = [&](const char* k) -> std::string_view {
                auto it = kv.find(k);
                if (it == kv.end()) throw DataError(std::string("calibration report svr line lacks ") + k);
                return it->second;
            };
            rep.svr.kernel = svr::parse_kernel(get("kernel"));
            rep.svr.C = parse_double(get("C"), line_no);
            rep.svr.epsilon = parse_double(get("epsilon"), line_no);
            rep.svr.gamma = parse_double(get("gamma"), line_no);
            rep.svr.scaling = svr::parse_scaling(get("scaling"));
            rep.svr.tolerance = parse_double(get("tolerance"), line_no);
            rep.svr.max_iterations = parse_size(get("max_iterations"), line_no);
        } else if (key == "eligibility") {
            need(3);
            if (f[1].substr(0, 10) != "min_train=" || f[2].substr(0, 9) != "min_test=")
                throw DataError("bad eligibility line in calibration report");
            rep.eligibility.min_train = parse_size(f[1].substr(10), line_no);
            rep.eligibility.min_test = parse_size(f[2].substr(9), line_no);
        } else if (key == "mode") {
            need(2);
            if (cur) throw DataError(fmt::format("calibration report line {}: unterminated section", line_no));
            rep.sections.emplace_back();
            cur = &rep.sections.back();
            cur->mode = parse_calib_mode(f[1]);
            row_of.clear();
        } else if (key == "bank") {
            need(3);
            in_section();
            cur->bank_fingerprints.emplace_back(f[2]);
        } else if (key == "subject_id") {
            in_section();
        } else if (key == "excluded") {
            need(4);
            in_section();
            SubjectResult r;
            r.subject_id = std::string(f[1]);
            r.n_train = parse_size(f[2], line_no);
            r.n_test = parse_size(f[3], line_no);
            cur->rows.push_back(std::move(r));
        } else if (key == "baseline") {
            need(3);
            in_section();
            auto it = row_of.find(std::string(f[1]));
            if (it == row_of.end()) throw DataError(fmt::format("calibration report line {}: unknown subject", line_no));
            cur->rows[it->second].uncalibrated_cm = parse_double(f[2], line_no);
        } else if (key == "model") {
            need(4);
            in_section();
            auto it = row_of.find(std::string(f[1]));
            if (it == row_of.end()) throw DataError(fmt::format("calibration report line {}: unknown subject", line_no));
            auto& row = cur->rows[it->second];
            if (!row.model) row.model.emplace();
            svr::SvrModel sm = svr::deserialize_svr(f[3]);
            row.model->standardizer = sm.standardizer;
            if (f[2] == "x") {
                row.model->x = std::move(sm);
            } else if (f[2] == "y") {
                row.model->y = std::move(sm);
            } else {
                throw DataError(fmt::format("calibration report line {}: bad output axis", line_no));
            }
        } else if (key == "aggregate") {
            in_section();
            if (f.size() == 4 && f[1] == "counts") {
                cur->calibrated.subjects = cur->uncalibrated.subjects = parse_size(f[2], line_no);
                cur->calibrated.frames = cur->uncalibrated.frames = parse_size(f[3], line_no);
                continue;
            }
            need(4);
            Aggregate& a = f[1] == "calibrated" ? cur->calibrated : cur->uncalibrated;
            if (f[1] != "calibrated" && f[1] != "uncalibrated") throw DataError("bad aggregate line in calibration report");
            if (f[2] == "frame_weighted") {
                a.frame_weighted = parse_double(f[3], line_no);
            } else if (f[2] == "subject_mean") {
                a.subject_mean = parse_double(f[3], line_no);
            } else {
                throw DataError("bad aggregate line in calibration report");
            }
        } else if (key == "end") {
            need(2);
            in_section();
            std::sort(cur->rows.begin(), cur->rows.end(),
                      [](const SubjectResult& a, const SubjectResult& b) { return a.subject_id < b.subject_id; });
            cur = nullptr;
        } else {
            need(4);
            in_section();
            SubjectResult r;
            r.subject_id = std::string(f[0]);
            r.n_train = parse_size(f[1], line_no);
            r.n_test = parse_size(f[2], line_no);
            r.error_cm = parse_double(f[3], line_no);
            r.eligible = true;
            row_of[r.subject_id] = cur->rows.size();
            cur->rows.push_back(std::move(r));
        }
    }
    if (!saw_magic) throw DataError("empty calibration report");
    if (cur) throw DataError("calibration report ends inside a section");
    return rep;
}

CalibrationReport run_calibration_study(const std::vector<const EnsembleBank*>& banks, const data::Manifest& m,
                                        const data::CropStore& store, const std::vector<CalibMode>& modes,
                                        const svr::SvrConfig& cfg, const Eligibility& elig) {
    cfg.validate();
    if (modes.empty()) throw UsageError("no calibration modes requested");
    CalibrationReport rep;
    rep.svr = cfg;
    rep.eligibility = elig;
    std::vector<std::size_t> records;
    for (std::size_t i = 0; i < m.records.size(); ++i)
        if (m.records[i].split != data::Split::val) records.push_back(i);
    const std::vector<std::string> subjects = m.subjects();
    for (CalibMode mode : modes) {
        const EnsembleBank& bank = bank_for(banks, mode);
        const EnsembleFeatures f = extract_ensemble_features(bank, m, store, records, mode);
        std::map<std::string, SubjectRows> by_subject;
        for (const auto& id : subjects) by_subject[id];
        for (std::size_t i = 0; i < f.records.size(); ++i) {
            const auto& r = m.records[f.records[i]];
            auto& rows = by_subject[r.subject_id];
            (r.split == data::Split::train ? rows.train : rows.test).push_back(i);
        }
        ModeSection sec;
        sec.mode = mode;
        sec.bank_fingerprints = bank.fingerprints();
        sec.rows.resize(subjects.size());
        parallel_for(subjects.size(), [&](std::size_t k) {
            sec.rows[k] = score_subject(subjects[k], m, f, by_subject.at(subjects[k]), cfg, elig);
        });
        sec.calibrated = aggregate(sec.rows, false);
        sec.uncalibrated = aggregate(sec.rows, true);
        if (sec.calibrated.subjects == 0)
            throw DataError("no subject meets the calibration thresholds in mode '" + std::string(to_string(mode)) + "'");
        spdlog::info("calibration {}: {} subjects, {:.3f} cm calibrated vs {:.3f} cm uncalibrated", to_string(mode),
                     sec.calibrated.subjects, sec.calibrated.frame_weighted, sec.uncalibrated.frame_weighted);
        rep.sections.push_back(std::move(sec));
    }
    return rep;
}

}  // namespace gazeforge::calib
