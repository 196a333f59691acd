// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gazeforge::eval {

/// Which eye data produced a result: two-eye models, one eye of a one-eye model, the
/// concatenated right+left calibration, or the mean of a right and a left result.
enum class EyeData { two_eye, right, left, both, right_left_mean };

std::string_view to_string(EyeData e) noexcept;
EyeData parse_eye_data(std::string_view s);

inline constexpr std::string_view kCalibrationRow = "Calibration";

/// One evaluated (model, eye data, split) cell.
struct Result {
    std::string model;  // display name, or kCalibrationRow
    EyeData eye = EyeData::two_eye;
    std::string split = "test";
    double error_cm = 0.0;
    std::size_t n = 0;
    std::optional<std::size_t> params;  // absent for calibration rows

    /// Mean of per-frame Euclidean errors. Throws UsageError when empty.
    static Result from_errors(std::string model, EyeData eye, std::string split, const std::vector<double>& errors,
                              std::optional<std::size_t> params);
};

struct ReportRow {
    std::string block;  // table1 | table2 | table3
    Result result;
};

struct EvalReport {
    std::vector<ReportRow> rows;

    std::vector<ReportRow> block(std::string_view name) const;
    /// Aligned text tables, errors at 3 decimals.
    std::string text() const;
    /// `block<TAB>model<TAB>eye_mode<TAB>split<TAB>error_cm<TAB>n<TAB>params` per row,
    /// shortest round-trip reals, `-` for absent params.
    std::string tsv() const;
};

/// table1: two-eye rows in input order. table2: right/left/both rows in input order.
/// table3: for every (model, split) with both a right and a left row, their mean
/// (frames summed). Calibration rows sort after model rows within each block.
EvalReport build_report(const std::vector<Result>& results);

}  // namespace gazeforge::eval
