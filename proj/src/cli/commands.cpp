// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <ostream>
#include <sstream>

#include "gazeforge/calib/calibration.hpp"
#include "gazeforge/cli/cli.hpp"
#include "gazeforge/core/error.hpp"
#include "gazeforge/core/parallel.hpp"
#include "gazeforge/data/gazecapture.hpp"
#include "gazeforge/data/synthetic.hpp"
#include "gazeforge/eval/report.hpp"
#include "gazeforge/io/tensor_file.hpp"
#include "gazeforge/model/assembly_checks.hpp"
#include "gazeforge/model/checkpoint.hpp"
#include "gazeforge/nn/layer_checks.hpp"
#include "gazeforge/train/trainer.hpp"

namespace gazeforge::cli {

namespace fs = std::filesystem;

namespace {

class Options {
public:
    Options(std::string command, Settings s) : command_(std::move(command)), s_(std::move(s)) {}

    const std::string& command() const noexcept { return command_; }
    const std::string& str(const std::string& key) const { return s_.at(key); }

    std::size_t size(const std::string& key) const {
        const std::string& v = str(key);
        std::size_t out = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size()) bad(key, "a non-negative integer");
        return out;
    }
    double real(const std::string& key) const {
        const std::string& v = str(key);
        std::size_t used = 0;
        double out = 0;
        try {
            out = std::stod(v, &used);
        } catch (const std::exception&) {
            bad(key, "a number");
        }
        if (used != v.size()) bad(key, "a number");
        return out;
    }
    bool flag(const std::string& key) const {
        const std::string& v = str(key);
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
        bad(key, "true or false");
    }
    std::vector<std::string> list(const std::string& key) const {
        std::vector<std::string> out;
        std::stringstream in(str(key));
        std::string item;
        while (std::getline(in, item, ','))
            if (!item.empty()) out.push_back(item);
        if (out.empty()) bad(key, "a non-empty comma separated list");
        return out;
    }

private:
    [[noreturn]] void bad(const std::string& key, const char* what) const {
        throw ConfigError("--" + key + " expects " + what + ", got '" + str(key) + "'");
    }

    std::string command_;
    Settings s_;
};

struct Context {
    const Options& opt;
    std::ostream& out;
    fs::path out_dir;
};

fs::path data_dir(const Context& c) { return c.out_dir / "data"; }

fs::path manifest_path(const Context& c) {
    const std::string& m = c.opt.str("manifest");
    return m.empty() ? data_dir(c) / "manifest.tsv" : fs::path(m);
}

fs::path checkpoint_dir(const Context& c) {
    if (c.opt.command() != "train") {
        const std::string& d = c.opt.str("checkpoint-dir");
        if (!d.empty()) return d;
    }
    return c.out_dir / "checkpoints";
}

std::string model_key(model::Architecture a, model::EyeMode e) {
    return fmt::format("{}_{}", model::to_string(a), model::to_string(e));
}

std::vector<model::Architecture> architectures(const Options& o) {
    std::vector<model::Architecture> out;
    for (const auto& s : o.list("arch")) {
        if (s == "all") {
            for (auto a : model::kArchitectures)
                if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
            continue;
        }
        const auto a = model::parse_architecture(s);
        if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    }
    return out;
}

model::EyeMode parse_eyes(const std::string& s) {
    if (s == "two") return model::EyeMode::two_eye;
    if (s == "one") return model::EyeMode::one_eye;
    return model::parse_eye_mode(s);
}

std::vector<model::EyeMode> eye_modes(const Options& o) {
    std::vector<model::EyeMode> out;
    for (const auto& s : o.list("eyes")) {
        const auto e = parse_eyes(s);
        if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
    }
    return out;
}

model::ModelSpec model_spec(const Options& o, model::Architecture a, model::EyeMode e) {
    model::ModelSpec s;
    s.architecture = a;
    s.eye_mode = e;
    s.dropout = o.real("dropout");
    s.leaky_slope = o.real("leaky-slope");
    s.head_slope = o.real("head-slope");
    s.image_extent = o.size("image-extent");
    s.geometry = model::parse_geometry(o.str("geometry"));
    s.width = o.size("width");
    s.validate();
    return s;
}

data::Manifest load_manifest(const Context& c) {
    const fs::path p = manifest_path(c);
    if (!fs::is_regular_file(p)) throw DataError("manifest " + p.string() + " not found; run preprocess first");
    return data::read_manifest(p);
}

void write_text(const fs::path& path, const std::string& text) { io::write_file_atomic(path, text); }

std::string split_counts(const data::Manifest& m) {
    const auto c = m.counts();
    return fmt::format("{} frames (train {}, val {}, test {})", m.records.size(), c[0], c[1], c[2]);
}

data::SplitRatios ratios(const Options& o) {
    return {o.real("split-train"), o.real("split-val"), o.real("split-test")};
}

int cmd_preprocess(const Context& c) {
    const Options& o = c.opt;
    const bool alias = o.command() == "synth";
    const bool synthetic = alias || o.flag("synthetic");
    const std::string root = alias ? std::string() : o.str("data-root");
    if (synthetic == !root.empty())
        throw ConfigError("give exactly one data source: --data-root or --synthetic");
    const fs::path dir = data_dir(c);
    data::Manifest m;
    if (synthetic) {
        data::SyntheticConfig cfg;
        cfg.subjects = o.size("synth-subjects");
        cfg.frames_per_subject = o.size("synth-frames");
        if (cfg.subjects == 0 || cfg.frames_per_subject == 0) throw ConfigError("synthetic dataset would be empty");
        cfg.seed = o.size("seed");
        cfg.extent = o.size("image-extent");
        cfg.bias_min = o.real("synth-bias-min");
        cfg.bias_max = o.real("synth-bias-max");
        if (cfg.bias_min < 0 || cfg.bias_max < cfg.bias_min) throw ConfigError("need 0 <= synth-bias-min <= synth-bias-max");
        cfg.noise = o.real("synth-noise");
        cfg.dots = o.size("synth-dots");
        cfg.subject_prefix = o.str("synth-prefix");
        cfg.ratios = ratios(o);
        m = data::write_synthetic_to_disk(cfg, dir);
    } else {
        data::GazeCaptureFilters filters;
        filters.phones_only = o.flag("phones-only");
        filters.portrait_only = o.flag("portrait-only");
        const data::RawIndex index = data::load_gazecapture_metadata(root, filters);
        if (index.frames.empty()) throw DataError("no usable frames below " + root);
        data::PreprocessOptions popts;
        popts.extent = o.size("image-extent");
        popts.jpeg_crops = o.flag("jpeg-crops");
        popts.ratios = ratios(o);
        popts.seed = o.size("seed");
        const data::PreprocessResult r = data::preprocess_gazecapture(index, dir, popts);
        m = r.manifest;
        c.out << fmt::format("skipped {} frames while indexing, {} while cropping\n", index.skipped, r.rejected);
    }
    c.out << fmt::format("manifest {}: {}\n", (dir / "manifest.tsv").string(), split_counts(m));
    c.out << fmt::format("fingerprint {}\n", to_hex(m.fingerprint));
    return kExitOk;
}

int cmd_train(const Context& c) {
    const Options& o = c.opt;
    const auto archs = architectures(o);
    const auto eyes = eye_modes(o);
    const std::string resume = o.str("resume");
    if (!resume.empty() && archs.size() * eyes.size() != 1)
        throw ConfigError("--resume needs a single --arch and --eyes");
    const data::Manifest m = load_manifest(c);
    const data::FileCropStore store(manifest_path(c).parent_path(), o.size("image-extent"));
    for (auto e : eyes) {
        for (auto a : archs) {
            train::TrainConfig cfg;
            cfg.spec = model_spec(o, a, e);
            cfg.epochs = o.size("epochs");
            cfg.batch_size = o.size("batch-size");
            cfg.base_lr = o.real("base-lr");
            cfg.gamma = o.real("gamma");
            cfg.seed = o.size("seed");
            cfg.redraw_eyes = o.flag("redraw-eyes");
            cfg.eval_batch = o.size("eval-batch");
            cfg.adam = {o.real("adam-beta1"), o.real("adam-beta2"), o.real("adam-eps")};
            cfg.checkpoint = checkpoint_dir(c) / (model_key(a, e) + ".gze");
            cfg.log = c.out_dir / "logs" / (model_key(a, e) + ".tsv");
            cfg.resume_from = resume;
            spdlog::info("training {} on {}", cfg.spec.canonical(), split_counts(m));
            const train::TrainResult r = train::train_model(cfg, m, store);
            c.out << fmt::format("{}: best epoch {} val_mse {:.6f} -> {}\n", model_key(a, e), r.log.best_epoch,
                                 r.log.best_val_mse(), cfg.checkpoint.string());
        }
    }
    return kExitOk;
}

struct LoadedModel {
    model::ModelSpec spec;
    model::ModelState<float> state;
};

// Loads every requested checkpoint, or throws DataError listing all missing files.
std::vector<LoadedModel> load_models(const Context& c, const std::vector<std::pair<model::Architecture, model::EyeMode>>& want,
                                     const std::string& what) {
    std::vector<std::string> missing;
    for (const auto& [a, e] : want) {
        const fs::path p = checkpoint_dir(c) / (model_key(a, e) + ".gze");
        if (!fs::is_regular_file(p)) missing.push_back(p.string());
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& p : missing) list += (list.empty() ? "" : ", ") + p;
        throw DataError(what + ": missing checkpoint" + (missing.size() > 1 ? "s " : " ") + list);
    }
    std::vector<LoadedModel> out;
    for (const auto& [a, e] : want) {
        LoadedModel lm{model_spec(c.opt, a, e), {}};
        lm.state = model::load_checkpoint(checkpoint_dir(c) / (model_key(a, e) + ".gze"), model::build_assembly(lm.spec));
        out.push_back(std::move(lm));
    }
    return out;
}

eval::Result make_result(std::string model, eval::EyeData eye, data::Split split, const eval::Metrics& mt,
                         std::optional<std::size_t> params) {
    eval::Result r;
    r.model = std::move(model);
    r.eye = eye;
    r.split = std::string(data::to_string(split));
    r.error_cm = mt.mean_error_cm;
    r.n = mt.n;
    r.params = params;
    return r;
}

int cmd_eval(const Context& c) {
    const Options& o = c.opt;
    std::vector<data::Split> splits;
    for (const auto& s : o.list("splits")) splits.push_back(data::parse_split(s));
    std::vector<std::pair<model::Architecture, model::EyeMode>> want;
    for (auto e : eye_modes(o))
        for (auto a : architectures(o)) want.emplace_back(a, e);
    const auto models = load_models(c, want, "eval");
    const data::Manifest m = load_manifest(c);
    const data::FileCropStore store(manifest_path(c).parent_path(), o.size("image-extent"));
    const std::size_t batch = o.size("eval-batch");

    std::vector<eval::Result> results;
    for (auto split : splits) {
        for (const auto& lm : models) {
            const model::Assembly a = model::build_assembly(lm.spec);
            const std::string name(model::display_name(lm.spec.architecture));
            const std::size_t params = model::count_parameters(a);
            const train::SplitEvaluation ev = train::evaluate_split(a, lm.state, m, store, split, batch);
            if (lm.spec.eye_mode == model::EyeMode::two_eye) {
                results.push_back(make_result(name, eval::EyeData::two_eye, split, ev.overall, params));
            } else {
                if (ev.right) results.push_back(make_result(name, eval::EyeData::right, split, *ev.right, params));
                if (ev.left) results.push_back(make_result(name, eval::EyeData::left, split, *ev.left, params));
            }
        }
    }
    if (const std::string cal = o.str("calibration-report"); !cal.empty()) {
        if (!fs::is_regular_file(cal)) throw DataError("calibration report " + cal + " not found");
        const auto rep = calib::CalibrationReport::parse(io::read_file(cal));
        for (const auto& sec : rep.sections) {
            eval::Result r;
            r.model = std::string(eval::kCalibrationRow);
            r.eye = eval::parse_eye_data(calib::to_string(sec.mode));
            r.split = "test";
            r.error_cm = sec.calibrated.frame_weighted;
            r.n = sec.calibrated.frames;
            results.push_back(r);
        }
    }
    const eval::EvalReport report = eval::build_report(results);
    write_text(c.out_dir / "reports" / "eval.txt", report.text());
    write_text(c.out_dir / "reports" / "eval.tsv", report.tsv());
    c.out << report.text();
    return kExitOk;
}

int cmd_calibrate(const Context& c) {
    const Options& o = c.opt;
    std::vector<calib::CalibMode> modes;
    for (const auto& s : o.list("mode")) {
        const auto md = calib::parse_calib_mode(s);
        if (std::find(modes.begin(), modes.end(), md) == modes.end()) modes.push_back(md);
    }
    svr::SvrConfig cfg;
    cfg.kernel = svr::parse_kernel(o.str("svr-kernel"));
    cfg.C = o.real("svr-c");
    cfg.epsilon = o.real("svr-epsilon");
    cfg.gamma = o.real("svr-gamma");
    cfg.scaling = svr::parse_scaling(o.str("svr-scaling"));
    cfg.tolerance = o.real("svr-tolerance");
    cfg.max_iterations = o.size("svr-max-iterations");
    cfg.validate();
    const calib::Eligibility elig{o.size("min-train"), o.size("min-test")};

    std::vector<model::EyeMode> needed;
    for (auto md : modes) {
        const auto e = calib::required_eye_mode(md);
        if (std::find(needed.begin(), needed.end(), e) == needed.end()) needed.push_back(e);
    }
    std::vector<std::pair<model::Architecture, model::EyeMode>> want;
    for (auto e : needed)
        for (auto a : model::kArchitectures) want.emplace_back(a, e);
    auto models = load_models(c, want, "incomplete ensemble bank");
    std::vector<calib::EnsembleBank> banks;
    for (std::size_t b = 0; b < needed.size(); ++b) {
        std::vector<model::ModelSpec> specs;
        std::vector<model::ModelState<float>> states;
        for (std::size_t k = 0; k < 4; ++k) {
            specs.push_back(models[b * 4 + k].spec);
            states.push_back(std::move(models[b * 4 + k].state));
        }
        banks.emplace_back(std::move(specs), std::move(states));
    }
    std::vector<const calib::EnsembleBank*> bank_ptrs;
    for (const auto& b : banks) bank_ptrs.push_back(&b);

    const data::Manifest m = load_manifest(c);
    const data::FileCropStore store(manifest_path(c).parent_path(), o.size("image-extent"));
    const calib::CalibrationReport rep = calib::run_calibration_study(bank_ptrs, m, store, modes, cfg, elig);

    std::string summary = fmt::format("{:<8} {:>9} {:>7} {:>13} {:>15} {:>10}\n", "mode", "subjects", "frames",
                                      "calibrated", "uncalibrated", "reduction");
    for (const auto& sec : rep.sections) {
        const double red = sec.uncalibrated.frame_weighted > 0
                               ? 1.0 - sec.calibrated.frame_weighted / sec.uncalibrated.frame_weighted
                               : 0.0;
        summary += fmt::format("{:<8} {:>9} {:>7} {:>13.3f} {:>15.3f} {:>9.1f}%\n", calib::to_string(sec.mode),
                               sec.calibrated.subjects, sec.calibrated.frames, sec.calibrated.frame_weighted,
                               sec.uncalibrated.frame_weighted, 100.0 * red);
    }
    write_text(c.out_dir / "reports" / "calibration.tsv", rep.format());
    write_text(c.out_dir / "reports" / "calibration.txt", summary);
    c.out << summary;
    return kExitOk;
}

int cmd_gradcheck(const Context& c) {
    const Options& o = c.opt;
    const std::string layer = o.str("layer");
    const auto& kinds = nn::layer_kinds();
    const bool all = layer == "all";
    const bool assemblies = all || layer == "assemblies";
    if (!all && !assemblies && std::find(kinds.begin(), kinds.end(), layer) == kinds.end()) {
        std::string known;
        for (const auto& k : kinds) known += " " + k;
        throw ConfigError("unknown --layer '" + layer + "'; expected all, assemblies or one of:" + known);
    }
    std::function<void(const std::string&, nn::Tensor<double>&)> tamper;
    if (o.flag("tamper")) {
        tamper = [](const std::string&, nn::Tensor<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = g.data()[i] * 1.01 + 1e-3;
        };
    }
    std::string text;
    bool ok = true;
    if (!assemblies || all) {
        nn::LayerCheckOptions lo;
        lo.trials = o.size("trials");
        lo.seed = o.size("seed");
        lo.tolerance = o.real("layer-tolerance");
        lo.tamper = tamper;
        const auto results = all ? nn::check_all_layers(lo) : std::vector{nn::check_layer(layer, lo)};
        for (const auto& r : results) {
            ok = ok && r.passed;
            text += fmt::format("layer     {:<22} trials {:>3}  max_rel {:.3e}  {}\n", r.kind, r.trials,
                                r.max_rel_error, r.passed ? "PASS" : "FAIL " + r.worst);
        }
    }
    if (assemblies) {
        model::AssemblyCheckOptions ao;
        ao.seed = o.size("seed");
        ao.tolerance = o.real("assembly-tolerance");
        ao.tamper = tamper;
        for (auto e : {model::EyeMode::two_eye, model::EyeMode::one_eye}) {
            for (auto a : model::kArchitectures) {
                const auto r = model::check_assembly(model::reduced_spec(a, e), ao);
                ok = ok && r.passed;
                std::string fail;
                for (const auto& f : r.failures()) fail += " " + f;
                text += fmt::format("assembly  {:<22} tensors {:>3}  max_rel {:.3e}  {}\n", model_key(a, e),
                                    r.entries.size(), r.max_rel_error, r.passed ? "PASS" : "FAIL" + fail);
            }
        }
    }
    text += ok ? "gradcheck passed\n" : "gradcheck FAILED\n";
    write_text(c.out_dir / "reports" / "gradcheck.txt", text);
    c.out << text;
    return ok ? kExitOk : kExitRuntime;
}

std::string describe(const std::string& cmd) {
    if (cmd == "preprocess") return "crop a GazeCapture tree (or synthesize data) into a split manifest";
    if (cmd == "synth") return "preprocess with the synthetic generator as the data source";
    if (cmd == "train") return "train (architecture, eye mode) models and keep the best validation checkpoint";
    if (cmd == "eval") return "evaluate checkpoints and write the result tables";
    if (cmd == "calibrate") return "per-subject SVR calibration on the four-model ensemble";
    return "finite-difference gradient checks of every layer kind and assembly";
}

struct WorkerLimit {
    std::size_t previous;
    explicit WorkerLimit(bool pin) : previous(pin ? set_worker_limit(1) : 0), active(pin) {}
    ~WorkerLimit() {
        if (active) set_worker_limit(previous);
    }
    bool active;
};

struct LoggerScope {
    std::shared_ptr<spdlog::logger> previous = spdlog::default_logger();
    LoggerScope(std::ostream& err, spdlog::level::level_enum level) {
        auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
        auto logger = std::make_shared<spdlog::logger>("gazeforge", sink);
        logger->set_pattern("[%l] %v");
        logger->set_level(level);
        spdlog::set_default_logger(logger);
    }
    ~LoggerScope() { spdlog::set_default_logger(previous); }
};

spdlog::level::level_enum parse_level(const std::string& s) {
    for (const char* l : {"trace", "debug", "info", "warn", "error", "off"})
        if (s == l) return spdlog::level::from_str(s);
    throw ConfigError("--log-level expects trace, debug, info, warn, error or off, got '" + s + "'");
}

int dispatch(const Options& o, std::ostream& out) {
    const fs::path out_dir = o.str("output-dir");
    if (out_dir.empty()) throw ConfigError("--output-dir must not be empty");
    const Context c{o, out, out_dir};
    const std::string& cmd = o.command();
    if (cmd == "preprocess" || cmd == "synth") return cmd_preprocess(c);
    if (cmd == "train") return cmd_train(c);
    if (cmd == "eval") return cmd_eval(c);
    if (cmd == "calibrate") return cmd_calibrate(c);
    return cmd_gradcheck(c);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Appearance-based gaze estimation: data, training, evaluation and calibration", "gazeforge"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "print help for every command");
    std::map<std::string, Settings> raw;
    std::map<std::string, std::vector<std::pair<std::string, CLI::Option*>>> options;
    for (const auto& cmd : command_names()) {
        CLI::App* sub = app.add_subcommand(cmd, describe(cmd));
        Settings& values = raw[cmd];
        for (const KeyInfo* k : keys_for(cmd)) {
            std::string& slot = values[k->key];
            const std::string help = k->help + (k->default_value.empty() ? "" : " [default: " + k->default_value + "]");
            CLI::Option* opt = k->is_flag ? sub->add_flag("--" + k->key + "{true}", slot, help)
                                          : sub->add_option("--" + k->key, slot, help)->type_name(k->type);
            options[cmd].emplace_back(k->key, opt);
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    Settings flags;
    for (const auto& [key, opt] : options[cmd])
        if (opt->count() > 0) flags[key] = raw[cmd][key];

    try {
        const Settings file = flags.count("config") ? read_config_file(flags["config"]) : Settings{};
        const Options o(cmd, resolve_settings(cmd, file, flags));
        LoggerScope logs(err, parse_level(o.str("log-level")));
        WorkerLimit limit(o.flag("deterministic"));
        return dispatch(o, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace gazeforge::cli
