#pragma once

#include "phonocard/model.hpp"
#include "phonocard/random.hpp"
#include "phonocard/signal_io.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace phonocard {

/// One heart cycle ready for the network: the raw (unscaled) fixed-length
/// cycle and its MFCC matrix (frames x coeffs, row-major).
struct Example {
    std::vector<float> cycle;
    std::vector<float> mfcc;
    Label label = Label::Normal;
    std::string patient_id;
    std::string record_id;
    int cycle_index = 0;
};

struct ExampleSet {
    std::vector<Example> items;
    std::size_t cycle_length = 2500;
    std::size_t mfcc_frames = 18;
    std::size_t mfcc_coeffs = 13;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
    std::size_t count(Label label) const;
    std::vector<Label> labels() const;
    /// Throws ShapeError if any example disagrees with the declared sizes.
    void validate() const;
};

/// Network input for the examples at `indices`. The waveform is peak
/// normalized and offset by one; the raw sequence is left as stored.
ModelInput<float> make_batch(const ExampleSet& set, std::span<const std::size_t> indices, Variant variant);

/// Index batches holding batch_size / 2 examples of each class. One epoch
/// is one pass over the larger class; the smaller class is drawn from
/// successive shuffled passes over itself, so it repeats.
std::vector<std::vector<std::size_t>> balanced_batches(std::span<const Label> labels, std::size_t batch_size,
                                                       Rng& rng);

// ---------------------------------------------------------------------------

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o);
    bool operator==(const ConfusionCounts&) const = default;
};

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Percentages. Abnormal is the positive class.
struct Metrics {
    double accuracy = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double macc = 0.0;
    ClassScores normal;
    ClassScores abnormal;
    ClassScores macro;
    ConfusionCounts counts;
    /// Set when some ratio had an empty denominator and was reported as 0.
    bool has_undefined = false;
};

Metrics compute_metrics(const ConfusionCounts& counts);

/// Mean of accuracy, sensitivity, specificity and MACC over several rows
/// (e.g. folds); the other fields are left zero.
Metrics average_metrics(std::span<const Metrics> rows);

inline constexpr double kDecisionThreshold = 0.5;

inline Label decide(double probability) {
    return probability >= kDecisionThreshold ? Label::Abnormal : Label::Normal;
}

ConfusionCounts count_confusion(std::span<const Label> predicted, std::span<const Label> truth);

enum class AggregationRule {
    Majority,         // abnormal cycle count >= normal cycle count
    MeanProbability,  // mean probability >= 0.5
};

struct PatientPrediction {
    std::string patient_id;
    std::vector<double> cycle_probabilities;
    Label predicted = Label::Normal;
    Label truth = Label::Normal;
};

PatientPrediction aggregate_patient(std::string patient_id, std::vector<double> cycle_probabilities, Label truth,
                                    AggregationRule rule = AggregationRule::Majority);

/// Groups cycles by patient (first-seen order) and aggregates each group.
std::vector<PatientPrediction> aggregate_patients(const ExampleSet& set, std::span<const double> probabilities,
                                                  AggregationRule rule = AggregationRule::Majority);

// ---------------------------------------------------------------------------

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    Variant variant = Variant::Full;
    /// Epochs between checkpoint callbacks; 0 disables them.
    std::size_t checkpoint_every = 0;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    /// From the Train-mode predictions made during the epoch.
    Metrics train;
};

struct TrainHooks {
    std::function<void(std::size_t epoch, std::size_t batch, double loss)> on_batch;
    std::function<void(const EpochRecord&)> on_epoch;
    std::function<void(std::size_t epoch, DualStreamModel<float>&)> on_checkpoint;
};

/// Forward in Train mode, binary cross-entropy, backward and one Adam step
/// per balanced batch. Throws DivergenceError on a non-finite loss.
std::vector<EpochRecord> train(DualStreamModel<float>& model, const ExampleSet& set, const TrainConfig& config,
                               const TrainHooks& hooks = {});

/// Eval-mode probabilities of the abnormal class, one per example.
std::vector<double> predict_probabilities(DualStreamModel<float>& model, const ExampleSet& set,
                                          std::size_t batch_size = 64);

struct Evaluation {
    std::vector<double> probabilities;
    Metrics cycles;
    std::vector<PatientPrediction> patients;
    Metrics patient_level;
};

Evaluation evaluate(DualStreamModel<float>& model, const ExampleSet& set,
                    AggregationRule rule = AggregationRule::Majority);
Metrics evaluate_cycles(DualStreamModel<float>& model, const ExampleSet& set);
Metrics evaluate_patients(DualStreamModel<float>& model, const ExampleSet& set,
                          AggregationRule rule = AggregationRule::Majority);

// ---------------------------------------------------------------------------

/// epoch,loss,accuracy,sensitivity,specificity,macc
std::string history_csv(std::span<const EpochRecord> history);

struct ReportRow {
    std::string name;
    Metrics metrics;
};

/// Header plus one row per entry: name,accuracy,sensitivity,specificity,macc,tp,tn,fp,fn
std::string metrics_csv(std::span<const ReportRow> rows);
/// Fixed-width table with the same columns, percentages to two decimals.
std::string metrics_table(const std::string& title, std::span<const ReportRow> rows);

} // namespace phonocard
