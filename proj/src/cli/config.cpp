// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <spdlog/spdlog.h>

#include "gazeforge/cli/cli.hpp"
#include "gazeforge/core/error.hpp"
#include "gazeforge/io/tensor_file.hpp"

namespace gazeforge::cli {

namespace {

const std::vector<std::string> kAll{"preprocess", "synth", "train", "eval", "calibrate", "gradcheck"};
const std::vector<std::string> kData{"preprocess", "synth"};
const std::vector<std::string> kModel{"train", "eval", "calibrate"};

std::vector<KeyInfo> make_keys() {
    std::vector<KeyInfo> k;
    auto add = [&](std::string key, std::string type, std::string def, std::string help,
                   std::vector<std::string> cmds, bool flag = false) {
        k.push_back({std::move(key), std::move(type), std::move(def), std::move(help), std::move(cmds), flag});
    };
    add("config", "PATH", "", "key=value config file; flags override its values", kAll);
    add("output-dir", "PATH", "run", "directory receiving every output of the command", kAll);
    add("seed", "INT", "1", "seed for data generation, splits, initialization and shuffling", kAll);
    add("deterministic", "BOOL", "false", "run single-threaded so reruns are reproducible on any machine", kAll, true);
    add("log-level", "TEXT", "info", "trace, debug, info, warn, error or off", kAll);

    add("data-root", "PATH", "", "GazeCapture root with one directory per subject", {"preprocess"});
    add("synthetic", "BOOL", "false", "generate a synthetic dataset instead of reading data-root", {"preprocess"}, true);
    add("synth-subjects", "INT", "20", "synthetic subjects", kData);
    add("synth-frames", "INT", "100", "synthetic frames per subject", kData);
    add("synth-bias-min", "REAL", "0", "smallest per-subject gaze bias magnitude, cm", kData);
    add("synth-bias-max", "REAL", "0", "largest per-subject gaze bias magnitude, cm", kData);
    add("synth-noise", "REAL", "0.02", "pixel noise standard deviation", kData);
    add("synth-dots", "INT", "0", "distinct dot positions shared by subjects; 0 draws every frame freely", kData);
    add("synth-prefix", "TEXT", "syn", "synthetic subject id prefix", kData);
    add("jpeg-crops", "BOOL", "false", "store each eye crop as a JPEG file", {"preprocess"}, true);
    add("phones-only", "BOOL", "true", "keep phone recordings only", {"preprocess"}, true);
    add("portrait-only", "BOOL", "true", "keep portrait frames only", {"preprocess"}, true);
    add("split-train", "REAL", "80", "train share of gaze points, percent", kData);
    add("split-val", "REAL", "8", "validation share of gaze points, percent", kData);
    add("split-test", "REAL", "12", "test share of gaze points, percent", kData);
    add("image-extent", "INT", "128", "eye crop side in pixels",
        {"preprocess", "synth", "train", "eval", "calibrate"});

    add("manifest", "PATH", "", "dataset manifest; default <output-dir>/data/manifest.tsv", kModel);
    add("arch", "LIST", "all", "architectures: cnn, resnet, inception, inception_resnet or all", kModel);
    add("eyes", "LIST", "two", "eye modes: two (two_eye) and/or one (one_eye)", {"train", "eval"});
    add("geometry", "TEXT", "standard", "standard (128 px layout) or compact (any extent divisible by 8)", kModel);
    add("width", "INT", "32", "first-stage channels", kModel);
    add("dropout", "REAL", "0.1", "dropout rate of the eye towers", kModel);
    add("leaky-slope", "REAL", "0.01", "negative slope of the tower activations", kModel);
    add("head-slope", "REAL", "0.01", "negative slope of the head activations; 0 is ReLU", kModel);
    add("eval-batch", "INT", "256", "inference batch size", kModel);

    add("epochs", "INT", "50", "training epochs", {"train"});
    add("batch-size", "INT", "256", "training batch size", {"train"});
    add("base-lr", "REAL", "0.016", "initial learning rate", {"train"});
    add("gamma", "REAL", "0.95", "learning rate decay per epoch; 1 disables decay", {"train"});
    add("adam-beta1", "REAL", "0.9", "Adam first moment decay", {"train"});
    add("adam-beta2", "REAL", "0.999", "Adam second moment decay", {"train"});
    add("adam-eps", "REAL", "1e-08", "Adam denominator offset", {"train"});
    add("redraw-eyes", "BOOL", "false", "one-eye: redraw the eye of each frame every epoch", {"train"}, true);
    add("resume", "PATH", "", "warm start from this checkpoint (single model only)", {"train"});

    add("checkpoint-dir", "PATH", "", "trained checkpoints; default <output-dir>/checkpoints", {"eval", "calibrate"});
    add("splits", "LIST", "test", "splits to evaluate: train, val, test", {"eval"});
    add("calibration-report", "PATH", "", "calibration report whose aggregates become Calibration rows", {"eval"});

    add("mode", "LIST", "two_eye,right,left,both", "calibration feature modes: two_eye, right, left, both",
        {"calibrate"});
    add("svr-kernel", "TEXT", "linear", "linear or rbf", {"calibrate"});
    add("svr-c", "REAL", "1", "box constraint C", {"calibrate"});
    add("svr-epsilon", "REAL", "0.1", "insensitive tube half-width, cm", {"calibrate"});
    add("svr-gamma", "REAL", "0", "rbf width; 0 derives it from the features", {"calibrate"});
    add("svr-scaling", "TEXT", "shared", "feature scaling: shared or per_feature", {"calibrate"});
    add("svr-tolerance", "REAL", "1e-10", "solver stopping tolerance (relative duality gap)", {"calibrate"});
    add("svr-max-iterations", "INT", "200000", "solver iteration cap", {"calibrate"});
    add("min-train", "INT", "10", "calibration frames a subject needs to be scored", {"calibrate"});
    add("min-test", "INT", "3", "test frames a subject needs to be scored", {"calibrate"});

    add("layer", "TEXT", "all", "all, assemblies, or one layer kind", {"gradcheck"});
    add("trials", "INT", "20", "randomized trials per layer kind", {"gradcheck"});
    add("layer-tolerance", "REAL", "1e-05", "maximum relative error for layers", {"gradcheck"});
    add("assembly-tolerance", "REAL", "0.0001", "maximum relative error for full assemblies", {"gradcheck"});
    add("tamper", "BOOL", "false", "perturb every analytic gradient (fault injection check)", {"gradcheck"}, true);
    return k;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

const KeyInfo* find_key(std::string_view key) {
    for (const auto& k : config_keys())
        if (k.key == key) return &k;
    return nullptr;
}

bool applies(const KeyInfo& k, std::string_view command) {
    return std::find(k.commands.begin(), k.commands.end(), command) != k.commands.end();
}

}  // namespace

const std::vector<std::string>& command_names() { return kAll; }

const std::vector<KeyInfo>& config_keys() {
    static const std::vector<KeyInfo> keys = make_keys();
    return keys;
}

std::vector<const KeyInfo*> keys_for(std::string_view command) {
    std::vector<const KeyInfo*> out;
    for (const auto& k : config_keys())
        if (applies(k, command)) out.push_back(&k);
    return out;
}

Settings parse_config_text(std::string_view text, const std::string& origin) {
    Settings out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key=value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key == "config") throw ConfigError(where + ": config files cannot include other config files");
        if (!find_key(key)) throw ConfigError(where + ": unknown key '" + key + "'");
        if (!out.emplace(key, value).second) throw ConfigError(where + ": key '" + key + "' given twice");
    }
    return out;
}

Settings read_config_file(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file " + path.string() + " not found");
    return parse_config_text(io::read_file(path), path.string());
}

Settings resolve_settings(std::string_view command, const Settings& file, const Settings& flags) {
    Settings out;
    for (const KeyInfo* k : keys_for(command)) out[k->key] = k->default_value;
    for (const auto& [key, value] : file) {
        if (out.count(key)) {
            out[key] = value;
        } else {
            spdlog::debug("config key '{}' does not apply to {}", key, command);
        }
    }
    for (const auto& [key, value] : flags) {
        if (!out.count(key)) throw UsageError("--" + key + " does not apply to " + std::string(command));
        out[key] = value;
    }
    return out;
}

}  // namespace gazeforge::cli
