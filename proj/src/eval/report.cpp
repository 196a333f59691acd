// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/eval/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

#include "gazeforge/core/error.hpp"

namespace gazeforge::eval {

namespace {

bool is_calibration(const Result& r) { return r.model == kCalibrationRow; }

void calibration_last(std::vector<ReportRow>& rows) {
    std::stable_partition(rows.begin(), rows.end(), [](const ReportRow& r) { return !is_calibration(r.result); });
}

std::string_view eye_label(EyeData e) {
    switch (e) {
        case EyeData::two_eye: return "Both Eyes";
        case EyeData::right: return "Right Eye";
        case EyeData::left: return "Left Eye";
        case EyeData::both: return "Both Right and Left Eye";
        case EyeData::right_left_mean: return "Average";
    }
    return "?";
}

std::string_view block_title(std::string_view block) {
    if (block == "table1") return "Two-eye models";
    if (block == "table2") return "One-eye models";
    return "One-eye models, mean of right and left eye";
}

}  // namespace

std::string_view to_string(EyeData e) noexcept {
    switch (e) {
        case EyeData::two_eye: return "two_eye";
        case EyeData::right: return "right";
        case EyeData::left: return "left";
        case EyeData::both: return "both";
        case EyeData::right_left_mean: return "right_left_mean";
    }
    return "?";
}

EyeData parse_eye_data(std::string_view s) {
    for (EyeData e : {EyeData::two_eye, EyeData::right, EyeData::left, EyeData::both, EyeData::right_left_mean})
        if (s == to_string(e)) return e;
    throw ConfigError("unknown eye data '" + std::string(s) + "'");
}

Result Result::from_errors(std::string model, EyeData eye, std::string split, const std::vector<double>& errors,
                           std::optional<std::size_t> params) {
    if (errors.empty()) throw UsageError("cannot report a mean error over zero frames");
    Result r;
    r.model = std::move(model);
    r.eye = eye;
    r.split = std::move(split);
    r.error_cm = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
    r.n = errors.size();
    r.params = params;
    return r;
}

std::vector<ReportRow> EvalReport::block(std::string_view name) const {
    std::vector<ReportRow> out;
    for (const auto& r : rows)
        if (r.block == name) out.push_back(r);
    return out;
}

std::string EvalReport::text() const {
    std::string out;
    for (std::string_view name : {"table1", "table2", "table3"}) {
        const auto rs = block(name);
        if (rs.empty()) continue;
        if (!out.empty()) out += "\n";
        out += fmt::format("{}\n", block_title(name));
        out += fmt::format("{:<18} {:<24} {:<6} {:>10} {:>8} {:>8}\n", "Model", "Eye Data", "Split", "Error (cm)",
                           "Frames", "Params");
        for (const auto& r : rs) {
            const Result& x = r.result;
            out += fmt::format("{:<18} {:<24} {:<6} {:>10.3f} {:>8} {:>8}\n", x.model,
                               name == "table1" ? "N/A" : eye_label(x.eye), x.split,
                               x.error_cm, x.n, x.params ? std::to_string(*x.params) : "N/A");
        }
    }
    return out;
}

std::string EvalReport::tsv() const {
    std::string out = "block\tmodel\teye_mode\tsplit\terror_cm\tn\tparams\n";
    for (const auto& r : rows) {
        const Result& x = r.result;
        out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.block, x.model, to_string(x.eye), x.split, x.error_cm, x.n,
                           x.params ? std::to_string(*x.params) : "-");
    }
    return out;
}

EvalReport build_report(const std::vector<Result>& results) {
    std::vector<ReportRow> t1, t2, t3;
    for (const auto& r : results) {
        if (r.eye == EyeData::right_left_mean) throw UsageError("averaged rows are derived, not inputs");
        (r.eye == EyeData::two_eye ? t1 : t2).push_back({"table1", r});
    }
    for (auto& r : t2) r.block = "table2";
    for (const auto& r : t2) {
        if (r.result.eye != EyeData::right) continue;
        const auto left = std::find_if(t2.begin(), t2.end(), [&](const ReportRow& o) {
            return o.result.eye == EyeData::left && o.result.model == r.result.model && o.result.split == r.result.split;
        });
        if (left == t2.end()) continue;
        Result avg = r.result;
        avg.error_cm = 0.5 * (r.result.error_cm + left->result.error_cm);
        avg.n = r.result.n + left->result.n;
        avg.eye = EyeData::right_left_mean;
        t3.push_back({"table3", avg});
    }
    for (auto* block : {&t1, &t2, &t3}) calibration_last(*block);
    EvalReport rep;
    for (auto* block : {&t1, &t2, &t3}) rep.rows.insert(rep.rows.end(), block->begin(), block->end());
    return rep;
}

}  // namespace gazeforge::eval
