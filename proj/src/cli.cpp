#include "phonocard/cli.hpp"

#include "io_util.hpp"
#include "phonocard/archive.hpp"
#include "phonocard/model.hpp"
#include "phonocard/nn/checkpoint.hpp"
#include "phonocard/signal_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#ifndef PHONOCARD_VERSION
#define PHONOCARD_VERSION "unknown"
#endif

namespace phonocard::cli {

namespace fs = std::filesystem;

namespace {

/// Raised for invalid or missing arguments; maps to exit status 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string command_name(Command c) {
    switch (c) {
    case Command::Prepare: return "prepare";
    case Command::ExtractFeatures: return "extract-features";
    case Command::Train: return "train";
    case Command::Evaluate: return "evaluate";
    case Command::Predict: return "predict";
    case Command::Ablation: return "ablation";
    }
    return "unknown";
}

std::string real_text(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

template <typename N>
N parse_number(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    N v{};
    in >> v;
    if (in.fail() || !in.eof()) {
        throw ConfigError("config value " + key + " = '" + text + "' is not a valid number");
    }
    return v;
}

// Work-directory layout.
fs::path cycles_dir(const RunConfig& rc) { return rc.work_dir / "cycles"; }
fs::path features_dir(const RunConfig& rc) { return rc.work_dir / "features"; }
fs::path run_dir(const RunConfig& rc, Variant v) {
    return rc.work_dir / "runs" / (std::string(variant_key(v)) + "-fold" + std::to_string(rc.fold));
}

void write_provenance(const fs::path& dir, const RunConfig& rc) {
    fs::create_directories(dir);
    ConfigMap p = rc.resolved();
    p["run.command"] = command_name(rc.command);
    p["run.version"] = PHONOCARD_VERSION;
    p["run.seed"] = std::to_string(rc.seed);
    detail::write_file_atomic(dir / "provenance.txt", format_config(p));
}

ConfigMap preprocess_map(const PreprocessConfig& p) {
    return {{"preprocess.target_rate", std::to_string(p.target_rate)},
            {"preprocess.low_cut", real_text(p.filter.low_cut)},
            {"preprocess.high_cut", real_text(p.filter.high_cut)},
            {"preprocess.order", std::to_string(p.filter.order)},
            {"preprocess.cycle_length", std::to_string(p.cycle_length)}};
}

ConfigMap mfcc_map(const MfccConfig& m) {
    ConfigMap out;
    for (const auto& [k, v] : parse_config(m.to_text())) {
        out["mfcc." + k] = v;
    }
    return out;
}

std::string mfcc_digest(const MfccConfig& m) { return config_digest(m.to_text()); }

// ---------------------------------------------------------------------------

ExampleSet load_examples(const RunConfig& rc, bool need_mfcc) {
    const auto cycles = read_cycle_archive(cycles_dir(rc), rc.preprocess.cycle_length);
    if (!need_mfcc) {
        auto set = make_example_set(cycles, nullptr, rc.preprocess.cycle_length);
        set.mfcc_frames = rc.mfcc.frames_for(rc.preprocess.cycle_length);
        set.mfcc_coeffs = rc.mfcc.n_coeffs;
        return set;
    }
    const auto archive = read_mfcc_archive(features_dir(rc));
    if (!(archive.config == rc.mfcc)) {
        throw ConfigError("feature archive was built with MFCC config " + mfcc_digest(archive.config) +
                          " but this run uses " + mfcc_digest(rc.mfcc) + "; re-run extract-features");
    }
    return make_example_set(cycles, &archive, rc.preprocess.cycle_length);
}

struct FoldSets {
    ExampleSet train;
    ExampleSet test;
};

FoldSets split_fold(const ExampleSet& all, const RunConfig& rc) {
    const auto folds = read_folds(rc.work_dir / "folds.csv");
    const FoldSplit* split = nullptr;
    for (const auto& f : folds) {
        if (f.fold_index == rc.fold) {
            split = &f;
        }
    }
    if (split == nullptr) {
        throw ConfigError("fold " + std::to_string(rc.fold) + " is not in folds.csv (" + std::to_string(folds.size()) +
                          " folds prepared)");
    }
    FoldSets s;
    s.train.cycle_length = s.test.cycle_length = all.cycle_length;
    s.train.mfcc_frames = s.test.mfcc_frames = all.mfcc_frames;
    s.train.mfcc_coeffs = s.test.mfcc_coeffs = all.mfcc_coeffs;
    for (const auto& e : all.items) {
        if (split->test_patients.count(e.patient_id) != 0) {
            s.test.items.push_back(e);
        } else if (split->train_patients.count(e.patient_id) != 0) {
            s.train.items.push_back(e);
        }
    }
    return s;
}

ModelConfig model_config_for(const ExampleSet& set) {
    ModelConfig mc = ModelConfig::standard();
    mc.input_length = set.cycle_length;
    mc.mfcc_frames = set.mfcc_frames;
    mc.mfcc_coeffs = set.mfcc_coeffs;
    return mc;
}

nn::Checkpoint make_checkpoint(DualStreamModel<float>& model, const RunConfig& rc) {
    nn::Checkpoint ckpt = to_checkpoint(model);
    for (const auto& [k, v] : mfcc_map(rc.mfcc)) {
        ckpt.manifest[k] = v;
    }
    for (const auto& [k, v] : preprocess_map(rc.preprocess)) {
        ckpt.manifest[k] = v;
    }
    ckpt.manifest["mfcc.digest"] = mfcc_digest(rc.mfcc);
    ckpt.manifest["train.seed"] = std::to_string(rc.seed);
    ckpt.manifest["train.fold"] = std::to_string(rc.fold);
    return ckpt;
}

struct LoadedModel {
    DualStreamModel<float> model;
    MfccConfig mfcc;
    PreprocessConfig preprocess;
};

LoadedModel load_model(const fs::path& path) {
    const auto ckpt = nn::load_checkpoint(path);
    RunConfig tmp;
    apply_config(ckpt.manifest, tmp);
    const auto digest = ckpt.manifest.find("mfcc.digest");
    if (digest == ckpt.manifest.end() || digest->second != mfcc_digest(tmp.mfcc)) {
        throw FormatError("checkpoint MFCC settings do not match their recorded digest");
    }
    return {from_checkpoint(ckpt), tmp.mfcc, tmp.preprocess};
}

// ---------------------------------------------------------------------------

int cmd_prepare(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    const auto manifest = build_manifest(rc.data_root);
    if (manifest.recordings.empty()) {
        throw InsufficientData("no labeled recordings found under " + rc.data_root.string());
    }
    fs::create_directories(rc.work_dir);
    write_manifest(rc.work_dir / "manifest.csv", manifest);
    write_folds(rc.work_dir / "folds.csv", make_folds(manifest, rc.n_folds, rc.train_frac, rc.seed));

    std::vector<Cycle> cycles;
    std::size_t skipped = 0;
    for (const auto& entry : manifest.recordings) {
        Recording rec = read_wav(entry.path.is_absolute() ? entry.path : rc.data_root / entry.path);
        rec.id = entry.id;
        rec.patient_id = entry.patient_id;
        rec.label = entry.label;
        try {
            auto got = extract_cycles(rec, rc.preprocess);
            cycles.insert(cycles.end(), std::make_move_iterator(got.begin()), std::make_move_iterator(got.end()));
        } catch (const NoCyclesFound& e) {
            err << "warning: skipping " << entry.id << ": " << e.what() << "\n";
            ++skipped;
        } catch (const SignalTooShort& e) {
            err << "warning: skipping " << entry.id << ": " << e.what() << "\n";
            ++skipped;
        }
    }
    if (cycles.empty()) {
        throw NoCyclesFound("no recording yielded a heart cycle");
    }
    write_cycle_archive(cycles_dir(rc), cycles, rc.preprocess.cycle_length);
    write_provenance(cycles_dir(rc), rc);
    write_provenance(rc.work_dir, rc);

    std::size_t normal = 0;
    for (const auto& c : cycles) {
        normal += c.label == Label::Normal ? 1 : 0;
    }
    out << "recordings: " << manifest.recordings.size() << " (" << skipped << " skipped)\n"
        << "patients: " << manifest.patients().size() << "\n"
        << "cycles: " << cycles.size() << " (Normal " << normal << ", Abnormal " << cycles.size() - normal << ")\n"
        << "folds: " << rc.n_folds << "\n";
    return 0;
}

int cmd_extract_features(const RunConfig& rc, std::ostream& out) {
    const auto cycles = read_cycle_archive(cycles_dir(rc), rc.preprocess.cycle_length);
    const double fs_hz = rc.preprocess.target_rate;
    MfccExtractor extract(rc.mfcc, fs_hz);
    MfccArchive archive;
    archive.config = rc.mfcc;
    archive.sample_rate = fs_hz;
    archive.frames = rc.mfcc.frames_for(rc.preprocess.cycle_length);
    archive.matrices.reserve(cycles.size());
    for (const auto& c : cycles) {
        const auto m = extract(c.samples);
        archive.matrices.emplace_back(m.values.begin(), m.values.end());
    }
    write_mfcc_archive(features_dir(rc), archive);
    write_provenance(features_dir(rc), rc);
    out << "cycles: " << cycles.size() << "\n"
        << "mfcc: " << archive.frames << " frames x " << rc.mfcc.n_coeffs << " coefficients\n"
        << "config digest: " << mfcc_digest(rc.mfcc) << "\n";
    return 0;
}

struct TrainedRun {
    DualStreamModel<float> model;
    FoldSets data;
};

TrainedRun train_variant(const RunConfig& rc, Variant variant, std::ostream& out) {
    const ExampleSet all = load_examples(rc, uses_mfcc(variant));
    FoldSets data = split_fold(all, rc);
    if (data.train.empty()) {
        throw InsufficientData("fold " + std::to_string(rc.fold) + " has no training cycles");
    }
    auto model = build_variant<float>(variant, rc.seed, model_config_for(all));
    TrainConfig tc = rc.train;
    tc.variant = variant;
    tc.seed = rc.seed;

    const fs::path dir = run_dir(rc, variant);
    fs::create_directories(dir);
    write_provenance(dir, rc);
    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochRecord& r) {
        char line[160];
        std::snprintf(line, sizeof line, "[%s] epoch %zu/%zu loss %.5f acc %.2f macc %.2f\n",
                      std::string(variant_key(variant)).c_str(), r.epoch, tc.epochs, r.loss, r.train.accuracy,
                      r.train.macc);
        out << line << std::flush;
    };
    hooks.on_checkpoint = [&](std::size_t, DualStreamModel<float>& m) {
        nn::save_checkpoint(make_checkpoint(m, rc), dir / "checkpoint.pcgk");
    };
    if (tc.checkpoint_every == 0) {
        tc.checkpoint_every = tc.epochs;
    }
    const auto history = train(model, data.train, tc, hooks);
    detail::write_file_atomic(dir / "history.csv", history_csv(history));
    return {std::move(model), std::move(data)};
}

void write_evaluation(const fs::path& dir, const std::string& name, const Evaluation& ev, const ExampleSet& set) {
    fs::create_directories(dir);
    const ReportRow cyc{name, ev.cycles};
    const ReportRow pat{name, ev.patient_level};
    detail::write_file_atomic(dir / "cycle_metrics.csv", metrics_csv(std::span(&cyc, 1)));
    detail::write_file_atomic(dir / "patient_metrics.csv", metrics_csv(std::span(&pat, 1)));
    std::string preds = "record_id,patient_id,cycle_index,label,probability\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& e = set.items[i];
        preds += e.record_id + "," + e.patient_id + "," + std::to_string(e.cycle_index) + "," +
                 std::string(label_name(e.label)) + "," + real_text(ev.probabilities[i]) + "\n";
    }
    detail::write_file_atomic(dir / "predictions.csv", preds);
    std::string pats = "patient_id,cycles,truth,predicted\n";
    for (const auto& p : ev.patients) {
        pats += p.patient_id + "," + std::to_string(p.cycle_probabilities.size()) + "," +
                std::string(label_name(p.truth)) + "," + std::string(label_name(p.predicted)) + "\n";
    }
    detail::write_file_atomic(dir / "patients.csv", pats);
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
    auto run = train_variant(rc, rc.train.variant, out);
    out << "checkpoint: " << (run_dir(rc, rc.train.variant) / "checkpoint.pcgk").string() << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& rc, std::ostream& out) {
    auto loaded = load_model(rc.checkpoint);
    if (!(loaded.mfcc == rc.mfcc)) {
        throw ConfigError("checkpoint was trained with MFCC config " + mfcc_digest(loaded.mfcc) +
                          " but this run uses " + mfcc_digest(rc.mfcc));
    }
    const Variant variant = loaded.model.variant();
    const ExampleSet all = load_examples(rc, uses_mfcc(variant));
    const FoldSets data = split_fold(all, rc);
    const Evaluation ev = evaluate(loaded.model, data.test);

    const std::string name = "Fold-" + std::to_string(rc.fold + 1);
    const fs::path dir = rc.work_dir / "reports" / (std::string(variant_key(variant)) + "-fold" + std::to_string(rc.fold));
    write_evaluation(dir, name, ev, data.test);
    write_provenance(dir, rc);
    const ReportRow cyc{name, ev.cycles};
    const ReportRow pat{name, ev.patient_level};
    out << metrics_table("Results of the audio cycles", std::span(&cyc, 1)) << "\n"
        << metrics_table("Results on patient level", std::span(&pat, 1));
    return 0;
}

int cmd_predict(const RunConfig& rc, std::ostream& out) {
    auto loaded = load_model(rc.checkpoint);
    Recording rec = read_wav(rc.wav);
    rec.id = rc.wav.stem().string();
    rec.patient_id = rec.id;
    const auto cycles = extract_cycles(rec, loaded.preprocess);

    MfccArchive archive;
    archive.config = loaded.mfcc;
    archive.sample_rate = loaded.preprocess.target_rate;
    archive.frames = loaded.mfcc.frames_for(loaded.preprocess.cycle_length);
    MfccExtractor extract(loaded.mfcc, archive.sample_rate);
    for (const auto& c : cycles) {
        const auto m = extract(c.samples);
        archive.matrices.emplace_back(m.values.begin(), m.values.end());
    }
    const ExampleSet set = make_example_set(cycles, &archive, loaded.preprocess.cycle_length);
    const auto probs = predict_probabilities(loaded.model, set);
    const auto verdict = aggregate_patient(rec.id, probs, Label::Normal);
    out << "cycle,probability\n";
    for (std::size_t i = 0; i < probs.size(); ++i) {
        char line[64];
        std::snprintf(line, sizeof line, "%zu,%.6f\n", i, probs[i]);
        out << line;
    }
    out << "verdict: " << label_name(verdict.predicted) << "\n";
    return 0;
}

int cmd_ablation(const RunConfig& rc, std::ostream& out) {
    std::vector<ReportRow> cycle_rows, patient_rows;
    for (Variant v : kAllVariants) {
        auto run = train_variant(rc, v, out);
        const Evaluation ev = evaluate(run.model, run.data.test);
        cycle_rows.push_back({std::string(variant_title(v)), ev.cycles});
        patient_rows.push_back({std::string(variant_title(v)), ev.patient_level});
    }
    const fs::path dir = rc.work_dir / "ablation" / ("fold" + std::to_string(rc.fold));
    fs::create_directories(dir);
    detail::write_file_atomic(dir / "ablation_cycles.csv", metrics_csv(cycle_rows));
    detail::write_file_atomic(dir / "ablation_patients.csv", metrics_csv(patient_rows));
    write_provenance(dir, rc);
    out << metrics_table("Ablation (cycle level)", cycle_rows) << "\n"
        << metrics_table("Ablation (patient level)", patient_rows);
    return 0;
}

int dispatch(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    switch (rc.command) {
    case Command::Prepare: return cmd_prepare(rc, out, err);
    case Command::ExtractFeatures: return cmd_extract_features(rc, out);
    case Command::Train: return cmd_train(rc, out);
    case Command::Evaluate: return cmd_evaluate(rc, out);
    case Command::Predict: return cmd_predict(rc, out);
    case Command::Ablation: return cmd_ablation(rc, out);
    }
    return 1;
}

} // namespace

// ---------------------------------------------------------------------------

ConfigMap RunConfig::resolved() const {
    ConfigMap m = mfcc_map(mfcc);
    for (const auto& [k, v] : preprocess_map(preprocess)) {
        m[k] = v;
    }
    m["paths.data_root"] = data_root.string();
    m["paths.work_dir"] = work_dir.string();
    m["paths.checkpoint"] = checkpoint.string();
    if (!wav.empty()) {
        m["paths.wav"] = wav.string();
    }
    m["train.fold"] = std::to_string(fold);
    m["train.n_folds"] = std::to_string(n_folds);
    m["train.train_frac"] = real_text(train_frac);
    m["train.seed"] = std::to_string(seed);
    m["train.variant"] = std::string(variant_key(train.variant));
    m["train.epochs"] = std::to_string(train.epochs);
    m["train.batch_size"] = std::to_string(train.batch_size);
    m["train.lr"] = real_text(train.learning_rate);
    m["train.checkpoint_every"] = std::to_string(train.checkpoint_every);
    return m;
}

void apply_config(const ConfigMap& values, RunConfig& rc) {
    const auto mfcc = config_section(values, "mfcc");
    if (!mfcc.empty()) {
        MfccConfig base = rc.mfcc;
        ConfigMap merged = parse_config(base.to_text());
        for (const auto& [k, v] : mfcc) {
            merged[k] = v;
        }
        merged.erase("digest");
        rc.mfcc = MfccConfig::from_map(merged);
    }
    for (const auto& [key, value] : values) {
        if (key == "paths.data_root") {
            rc.data_root = value;
        } else if (key == "paths.work_dir") {
            rc.work_dir = value;
        } else if (key == "paths.checkpoint") {
            rc.checkpoint = value;
        } else if (key == "train.fold") {
            rc.fold = parse_number<int>(key, value);
        } else if (key == "train.n_folds") {
            rc.n_folds = parse_number<int>(key, value);
        } else if (key == "train.train_frac") {
            rc.train_frac = parse_number<double>(key, value);
        } else if (key == "train.seed") {
            rc.seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "train.variant") {
            rc.train.variant = parse_variant(value);
        } else if (key == "train.epochs") {
            rc.train.epochs = parse_number<std::size_t>(key, value);
        } else if (key == "train.batch_size") {
            rc.train.batch_size = parse_number<std::size_t>(key, value);
        } else if (key == "train.lr") {
            rc.train.learning_rate = parse_number<double>(key, value);
        } else if (key == "train.checkpoint_every") {
            rc.train.checkpoint_every = parse_number<std::size_t>(key, value);
        } else if (key == "preprocess.target_rate") {
            rc.preprocess.target_rate = parse_number<int>(key, value);
        } else if (key == "preprocess.low_cut") {
            rc.preprocess.filter.low_cut = parse_number<double>(key, value);
        } else if (key == "preprocess.high_cut") {
            rc.preprocess.filter.high_cut = parse_number<double>(key, value);
        } else if (key == "preprocess.order") {
            rc.preprocess.filter.order = parse_number<int>(key, value);
        } else if (key == "preprocess.cycle_length") {
            rc.preprocess.cycle_length = parse_number<std::size_t>(key, value);
        }
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Heart sound abnormality detection toolkit", "phonocard"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", PHONOCARD_VERSION);

    std::optional<std::string> data_root, work_dir, checkpoint, config_path, variant;
    std::optional<int> fold;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs, batch_size;
    std::optional<double> lr;
    app.add_option("--data-root", data_root, "Directory with WAV files and REFERENCE*.csv labels");
    app.add_option("--work-dir", work_dir, "Artifact directory (default: $PHONOCARD_WORKDIR)");
    app.add_option("--fold", fold, "Fold index, starting at 0");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--variant", variant, "conv-only, rnn-raw, rnn-mfcc, dual-no-attention or full");
    app.add_option("--epochs", epochs, "Training epochs");
    app.add_option("--batch-size", batch_size, "Training batch size (even)");
    app.add_option("--lr", lr, "Adam learning rate");
    app.add_option("--checkpoint", checkpoint, "Model checkpoint file");
    app.add_option("--config", config_path, "Settings file (key = value lines with [sections])");

    RunConfig rc;
    std::string wav;
    auto* prepare = app.add_subcommand("prepare", "Build the manifest, folds and cycle archive");
    auto* extract = app.add_subcommand("extract-features", "Compute MFCC features for every cycle");
    auto* train_cmd = app.add_subcommand("train", "Train one model variant on a fold");
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a fold's test patients");
    auto* predict = app.add_subcommand("predict", "Classify one WAV recording");
    auto* ablation = app.add_subcommand("ablation", "Train and score all five variants on one fold");
    predict->add_option("wav", wav, "Recording to classify")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << PHONOCARD_VERSION << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*prepare) {
            rc.command = Command::Prepare;
        } else if (*extract) {
            rc.command = Command::ExtractFeatures;
        } else if (*train_cmd) {
            rc.command = Command::Train;
        } else if (*eval_cmd) {
            rc.command = Command::Evaluate;
        } else if (*predict) {
            rc.command = Command::Predict;
        } else if (*ablation) {
            rc.command = Command::Ablation;
        }

        if (config_path) {
            if (!fs::exists(*config_path)) {
                throw UsageError("--config file '" + *config_path + "' does not exist");
            }
            apply_config(read_config_file(*config_path), rc);
        }
        if (data_root) rc.data_root = *data_root;
        if (work_dir) rc.work_dir = *work_dir;
        if (checkpoint) rc.checkpoint = *checkpoint;
        if (fold) rc.fold = *fold;
        if (seed) rc.seed = *seed;
        if (epochs) rc.train.epochs = *epochs;
        if (batch_size) rc.train.batch_size = *batch_size;
        if (lr) rc.train.learning_rate = *lr;
        if (variant) {
            try {
                rc.train.variant = parse_variant(*variant);
            } catch (const ConfigError& e) {
                throw UsageError(std::string("--variant: ") + e.what());
            }
        }
        rc.wav = wav;
        if (rc.work_dir.empty()) {
            if (const char* env = std::getenv("PHONOCARD_WORKDIR"); env != nullptr && *env != '\0') {
                rc.work_dir = env;
            }
        }

        const bool needs_work_dir = rc.command != Command::Predict;
        if (needs_work_dir && rc.work_dir.empty()) {
            throw UsageError("--work-dir is required (or set PHONOCARD_WORKDIR)");
        }
        if (rc.command == Command::Prepare && rc.data_root.empty()) {
            throw UsageError("--data-root is required for prepare");
        }
        if ((rc.command == Command::Evaluate || rc.command == Command::Predict) && rc.checkpoint.empty()) {
            throw UsageError("--checkpoint is required for " + command_name(rc.command));
        }
        if (rc.fold < 0) {
            throw UsageError("--fold must be non-negative");
        }
        if (rc.command == Command::Train || rc.command == Command::Ablation) {
            try {
                rc.train.validate();
            } catch (const ConfigError& e) {
                throw UsageError(e.what());
            }
        }
        return dispatch(rc, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.kind() << ": " << e.what() << "\n";
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: IoError: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args, std::cout, std::cerr);
}

} // namespace phonocard::cli
