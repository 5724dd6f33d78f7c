#pragma once

#include "phonocard/config.hpp"
#include "phonocard/features.hpp"
#include "phonocard/preprocess.hpp"
#include "phonocard/training.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace phonocard::cli {

enum class Command { Prepare, ExtractFeatures, Train, Evaluate, Predict, Ablation };

struct RunConfig {
    Command command = Command::Prepare;
    std::filesystem::path data_root;
    std::filesystem::path work_dir;
    std::filesystem::path checkpoint;
    std::filesystem::path wav;
    int fold = 0;
    int n_folds = 4;
    double train_frac = 0.9;
    std::uint64_t seed = 0;
    TrainConfig train;
    MfccConfig mfcc;
    PreprocessConfig preprocess;

    /// Every setting as "section.key" entries, for provenance files.
    ConfigMap resolved() const;
};

/// Parses arguments, runs one command and returns the process exit status:
/// 0 on success, 2 for argument errors, 1 for failures raised while running.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Applies settings from a config map on top of `config`.
void apply_config(const ConfigMap& values, RunConfig& config);

} // namespace phonocard::cli
