#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace phonocard {

enum class Label { Normal, Abnormal };

std::string_view label_name(Label label);
Label parse_label_name(std::string_view text);

/// One labeled audio record. Amplitudes are in [-1, 1].
struct Recording {
    std::string id;
    std::string patient_id;
    std::vector<double> samples;
    int sample_rate = 0;
    Label label = Label::Normal;
};

/// Reads a RIFF/WAVE 16-bit PCM mono file. Only samples and sample_rate are
/// filled in; the caller owns id, patient and label.
Recording read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM. Samples are clipped to [-1, 32767/32768] and
/// rounded to the nearest integer code.
void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate);

/// Parses "record_id,code" lines (-1 Normal, 1 Abnormal). A non-numeric
/// first line is treated as a header and skipped.
std::map<std::string, Label> read_labels(const std::filesystem::path& path);

struct ManifestEntry {
    std::string id;
    std::filesystem::path path;
    std::string patient_id;
    Label label = Label::Normal;
};

struct DatasetManifest {
    std::vector<ManifestEntry> recordings;
    std::map<Label, std::size_t> class_counts;

    void add(ManifestEntry entry);
    std::set<std::string> patients() const;
};

/// Patient id for a record without an explicit patient table: the part of
/// the id before the first '_' or '-', or the whole id when there is none.
std::string patient_id_from_record(std::string_view record_id);

/// Scans `data_root` recursively for *.wav files and REFERENCE*.csv label
/// files. An optional `patients.csv` ("record_id,patient_id") overrides the
/// prefix rule. Recordings without a label are skipped.
DatasetManifest build_manifest(const std::filesystem::path& data_root);

/// Manifest text: header "id,path,patient,label" then one line per record.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

struct FoldSplit {
    int fold_index = 0;
    std::set<std::string> train_patients;
    std::set<std::string> test_patients;
    std::uint64_t seed = 0;
};

/// Independent seeded patient shuffles, one per fold. The test side holds
/// round((1 - train_frac) * patients), clamped so both sides are non-empty.
std::vector<FoldSplit> make_folds(const DatasetManifest& manifest, int n_folds, double train_frac,
                                  std::uint64_t seed);

/// Fold table text: header "fold,patient,split" with split in {train,test}.
void write_folds(const std::filesystem::path& path, const std::vector<FoldSplit>& folds);
std::vector<FoldSplit> read_folds(const std::filesystem::path& path);

} // namespace phonocard
