#include "phonocard/training.hpp"

#include "phonocard/nn/optim.hpp"
#include "phonocard/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace phonocard {

using nn::Tensor;

std::size_t ExampleSet::count(Label label) const {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [&](const Example& e) { return e.label == label; }));
}

std::vector<Label> ExampleSet::labels() const {
    std::vector<Label> out;
    out.reserve(items.size());
    for (const auto& e : items) {
        out.push_back(e.label);
    }
    return out;
}

void ExampleSet::validate() const {
    for (const auto& e : items) {
        if (e.cycle.size() != cycle_length) {
            throw ShapeError("example " + e.record_id + "#" + std::to_string(e.cycle_index) + " has " +
                             std::to_string(e.cycle.size()) + " samples, expected " + std::to_string(cycle_length));
        }
        if (!e.mfcc.empty() && e.mfcc.size() != mfcc_frames * mfcc_coeffs) {
            throw ShapeError("example " + e.record_id + "#" + std::to_string(e.cycle_index) +
                             " has a mismatched MFCC matrix");
        }
    }
}

ModelInput<float> make_batch(const ExampleSet& set, std::span<const std::size_t> indices, Variant variant) {
    const std::size_t B = indices.size();
    const std::size_t L = set.cycle_length;
    const std::size_t M = set.mfcc_frames * set.mfcc_coeffs;
    ModelInput<float> in;
    if (uses_conv_stream(variant)) {
        in.waveform = Tensor<float>({B, 1, L});
        for (std::size_t b = 0; b < B; ++b) {
            const auto& cyc = set.items.at(indices[b]).cycle;
            const std::vector<double> raw(cyc.begin(), cyc.end());
            const auto scaled = scale_for_conv(raw);
            std::copy(scaled.begin(), scaled.end(), in.waveform.data() + b * L);
        }
    }
    if (variant == Variant::RnnRaw) {
        in.raw_sequence = Tensor<float>({B, L, 1});
        for (std::size_t b = 0; b < B; ++b) {
            std::copy_n(set.items.at(indices[b]).cycle.data(), L, in.raw_sequence.data() + b * L);
        }
    }
    if (uses_mfcc(variant)) {
        in.mfcc = Tensor<float>({B, set.mfcc_frames, set.mfcc_coeffs});
        for (std::size_t b = 0; b < B; ++b) {
            const auto& m = set.items.at(indices[b]).mfcc;
            if (m.size() != M) {
                throw ShapeError("example lacks MFCC features required by variant " +
                                 std::string(variant_key(variant)));
            }
            std::copy_n(m.data(), M, in.mfcc.data() + b * M);
        }
    }
    return in;
}

namespace {

/// Yields indices from successive shuffled passes over a pool.
class CyclingDraw {
public:
    CyclingDraw(std::vector<std::size_t> pool, Rng& rng) : pool_(std::move(pool)), rng_(rng) {}

    std::size_t next() {
        if (pos_ == 0) {
            shuffle(std::span<std::size_t>(pool_), rng_);
        }
        const std::size_t v = pool_[pos_];
        pos_ = (pos_ + 1) % pool_.size();
        return v;
    }

private:
    std::vector<std::size_t> pool_;
    Rng& rng_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::vector<std::size_t>> balanced_batches(std::span<const Label> labels, std::size_t batch_size,
                                                       Rng& rng) {
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw ConfigError("batch size must be even and at least 2, got " + std::to_string(batch_size));
    }
    std::vector<std::size_t> normal, abnormal;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == Label::Normal ? normal : abnormal).push_back(i);
    }
    if (normal.empty() || abnormal.empty()) {
        throw ClassMissing(std::string("no ") + (normal.empty() ? "Normal" : "Abnormal") +
                           " examples to draw balanced batches from");
    }
    const std::size_t half = batch_size / 2;
    const std::size_t n_batches = std::max<std::size_t>(1, std::max(normal.size(), abnormal.size()) / half);
    CyclingDraw draw_normal(std::move(normal), rng);
    CyclingDraw draw_abnormal(std::move(abnormal), rng);

    std::vector<std::vector<std::size_t>> batches(n_batches);
    for (auto& batch : batches) {
        batch.reserve(batch_size);
        for (std::size_t i = 0; i < half; ++i) {
            batch.push_back(draw_normal.next());
        }
        for (std::size_t i = 0; i < half; ++i) {
            batch.push_back(draw_abnormal.next());
        }
        shuffle(std::span<std::size_t>(batch), rng);
    }
    return batches;
}

// ---------------------------------------------------------------------------

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
}

Metrics compute_metrics(const ConfusionCounts& c) {
    if (c.total() == 0) {
        throw InsufficientData("cannot compute metrics from an empty confusion matrix");
    }
    Metrics m;
    m.counts = c;
    auto pct = [&](std::size_t num, std::size_t den) {
        if (den == 0) {
            m.has_undefined = true;
            return 0.0;
        }
        return 100.0 * static_cast<double>(num) / static_cast<double>(den);
    };
    auto f1 = [&](double p, double r) {
        if (p + r == 0.0) {
            m.has_undefined = true;
            return 0.0;
        }
        return 2.0 * p * r / (p + r);
    };
    m.accuracy = pct(c.tp + c.tn, c.total());
    m.sensitivity = pct(c.tp, c.tp + c.fn);
    m.specificity = pct(c.tn, c.tn + c.fp);
    m.macc = (m.sensitivity + m.specificity) / 2.0;

    m.abnormal.precision = pct(c.tp, c.tp + c.fp);
    m.abnormal.recall = m.sensitivity;
    m.abnormal.f1 = f1(m.abnormal.precision, m.abnormal.recall);
    m.normal.precision = pct(c.tn, c.tn + c.fn);
    m.normal.recall = m.specificity;
    m.normal.f1 = f1(m.normal.precision, m.normal.recall);
    m.macro.precision = (m.normal.precision + m.abnormal.precision) / 2.0;
    m.macro.recall = (m.normal.recall + m.abnormal.recall) / 2.0;
    m.macro.f1 = (m.normal.f1 + m.abnormal.f1) / 2.0;
    return m;
}

Metrics average_metrics(std::span<const Metrics> rows) {
    if (rows.empty()) {
        throw InsufficientData("no metric rows to average");
    }
    Metrics m;
    for (const auto& r : rows) {
        m.accuracy += r.accuracy;
        m.sensitivity += r.sensitivity;
        m.specificity += r.specificity;
        m.macc += r.macc;
        m.counts += r.counts;
    }
    const auto n = static_cast<double>(rows.size());
    m.accuracy /= n;
    m.sensitivity /= n;
    m.specificity /= n;
    m.macc /= n;
    return m;
}

ConfusionCounts count_confusion(std::span<const Label> predicted, std::span<const Label> truth) {
    if (predicted.size() != truth.size()) {
        throw ShapeError("prediction and truth lists differ in length");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] == Label::Abnormal;
        const bool t = truth[i] == Label::Abnormal;
        if (p && t) {
            ++c.tp;
        } else if (!p && !t) {
            ++c.tn;
        } else if (p) {
            ++c.fp;
        } else {
            ++c.fn;
        }
    }
    return c;
}

PatientPrediction aggregate_patient(std::string patient_id, std::vector<double> cycle_probabilities, Label truth,
                                    AggregationRule rule) {
    if (cycle_probabilities.empty()) {
        throw InsufficientData("patient " + patient_id + " has no cycles to aggregate");
    }
    PatientPrediction p;
    p.patient_id = std::move(patient_id);
    p.truth = truth;
    if (rule == AggregationRule::Majority) {
        std::size_t abnormal = 0;
        for (double q : cycle_probabilities) {
            abnormal += decide(q) == Label::Abnormal ? 1 : 0;
        }
        const std::size_t normal = cycle_probabilities.size() - abnormal;
        p.predicted = abnormal >= normal ? Label::Abnormal : Label::Normal;
    } else {
        double sum = 0.0;
        for (double q : cycle_probabilities) {
            sum += q;
        }
        p.predicted = decide(sum / static_cast<double>(cycle_probabilities.size()));
    }
    p.cycle_probabilities = std::move(cycle_probabilities);
    return p;
}

std::vector<PatientPrediction> aggregate_patients(const ExampleSet& set, std::span<const double> probabilities,
                                                  AggregationRule rule) {
    if (probabilities.size() != set.size()) {
        throw ShapeError("one probability per example is required");
    }
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<double>, Label>> groups;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& e = set.items[i];
        auto [it, inserted] = groups.try_emplace(e.patient_id, std::vector<double>{}, e.label);
        if (inserted) {
            order.push_back(e.patient_id);
        } else if (it->second.second != e.label) {
            throw LabelError("patient " + e.patient_id + " has cycles with conflicting labels");
        }
        it->second.first.push_back(probabilities[i]);
    }
    std::vector<PatientPrediction> out;
    out.reserve(order.size());
    for (const auto& id : order) {
        auto& [probs, truth] = groups.at(id);
        out.push_back(aggregate_patient(id, std::move(probs), truth, rule));
    }
    return out;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (epochs == 0) {
        throw ConfigError("epochs must be at least 1");
    }
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw ConfigError("batch size must be even and at least 2, got " + std::to_string(batch_size));
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be positive");
    }
}

std::vector<EpochRecord> train(DualStreamModel<float>& model, const ExampleSet& set, const TrainConfig& config,
                               const TrainHooks& hooks) {
    config.validate();
    set.validate();
    if (config.variant != model.variant()) {
        throw ConfigError("training config names variant " + std::string(variant_key(config.variant)) +
                          " but the model is " + std::string(variant_key(model.variant())));
    }
    const auto labels = set.labels();
    Rng rng = make_rng(config.seed, 1);
    nn::AdamState<float> adam;
    std::vector<EpochRecord> history;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto batches = balanced_batches(labels, config.batch_size, rng);
        double loss_sum = 0.0;
        std::vector<Label> predicted, truth;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& idx = batches[bi];
            const auto input = make_batch(set, idx, model.variant());
            Tensor<float> targets({idx.size(), 1});
            for (std::size_t i = 0; i < idx.size(); ++i) {
                targets[i] = labels[idx[i]] == Label::Abnormal ? 1.0f : 0.0f;
            }
            ForwardCache<float> cache;
            const auto probs = model.forward(input, nn::Mode::Train, &cache);
            const auto loss = nn::bce_loss(probs, targets);
            if (!std::isfinite(loss.loss)) {
                throw DivergenceError(epoch, bi, "training loss became non-finite");
            }
            if (hooks.on_batch) {
                hooks.on_batch(epoch, bi, loss.loss);
            }
            model.backward_from_logits(cache, nn::bce_logit_grad(probs, targets));
            std::vector<Tensor<float>*> params;
            for (auto& p : model.parameters()) {
                params.push_back(p.tensor);
            }
            nn::adam_step(params, adam, config.learning_rate);

            loss_sum += loss.loss;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                predicted.push_back(decide(probs[i]));
                truth.push_back(labels[idx[i]]);
            }
        }
        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.loss = loss_sum / static_cast<double>(batches.size());
        rec.train = compute_metrics(count_confusion(predicted, truth));
        history.push_back(rec);
        if (hooks.on_epoch) {
            hooks.on_epoch(rec);
        }
        if (hooks.on_checkpoint && config.checkpoint_every > 0 &&
            (rec.epoch % config.checkpoint_every == 0 || rec.epoch == config.epochs)) {
            hooks.on_checkpoint(rec.epoch, model);
        }
    }
    return history;
}

std::vector<double> predict_probabilities(DualStreamModel<float>& model, const ExampleSet& set,
                                          std::size_t batch_size) {
    set.validate();
    std::vector<double> out;
    out.reserve(set.size());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < set.size(); start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(set.size(), start + batch_size); ++i) {
            idx.push_back(i);
        }
        const auto probs = model.forward(make_batch(set, idx, model.variant()), nn::Mode::Eval);
        for (float p : probs.values()) {
            out.push_back(p);
        }
    }
    return out;
}

Evaluation evaluate(DualStreamModel<float>& model, const ExampleSet& set, AggregationRule rule) {
    if (set.empty()) {
        throw InsufficientData("evaluation set is empty");
    }
    Evaluation ev;
    ev.probabilities = predict_probabilities(model, set);
    std::vector<Label> predicted;
    for (double p : ev.probabilities) {
        predicted.push_back(decide(p));
    }
    ev.cycles = compute_metrics(count_confusion(predicted, set.labels()));
    ev.patients = aggregate_patients(set, ev.probabilities, rule);
    std::vector<Label> pp, pt;
    for (const auto& p : ev.patients) {
        pp.push_back(p.predicted);
        pt.push_back(p.truth);
    }
    ev.patient_level = compute_metrics(count_confusion(pp, pt));
    return ev;
}

Metrics evaluate_cycles(DualStreamModel<float>& model, const ExampleSet& set) {
    return evaluate(model, set).cycles;
}

Metrics evaluate_patients(DualStreamModel<float>& model, const ExampleSet& set, AggregationRule rule) {
    return evaluate(model, set, rule).patient_level;
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

} // namespace

std::string history_csv(std::span<const EpochRecord> history) {
    std::string out = "epoch,loss,accuracy,sensitivity,specificity,macc\n";
    for (const auto& r : history) {
        out += std::to_string(r.epoch) + "," + fmt(r.loss, 6) + "," + fmt(r.train.accuracy) + "," +
               fmt(r.train.sensitivity) + "," + fmt(r.train.specificity) + "," + fmt(r.train.macc) + "\n";
    }
    return out;
}

std::string metrics_csv(std::span<const ReportRow> rows) {
    std::string out = "name,accuracy,sensitivity,specificity,macc,tp,tn,fp,fn\n";
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        out += r.name + "," + fmt(m.accuracy) + "," + fmt(m.sensitivity) + "," + fmt(m.specificity) + "," +
               fmt(m.macc) + "," + std::to_string(m.counts.tp) + "," + std::to_string(m.counts.tn) + "," +
               std::to_string(m.counts.fp) + "," + std::to_string(m.counts.fn) + "\n";
    }
    return out;
}

std::string metrics_table(const std::string& title, std::span<const ReportRow> rows) {
    std::size_t width = 8;
    for (const auto& r : rows) {
        width = std::max(width, r.name.size());
    }
    auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(w, s.size()), ' ');
        return s;
    };
    auto lpad = [](const std::string& s, std::size_t w) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; };
    std::string out = title + "\n";
    out += pad("", width) + "  " + lpad("Accuracy", 9) + "  " + lpad("Sensitivity", 11) + "  " +
           lpad("Specificity", 11) + "  " + lpad("MACC", 7) + "\n";
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        out += pad(r.name, width) + "  " + lpad(fmt(m.accuracy, 2), 9) + "  " + lpad(fmt(m.sensitivity, 2), 11) +
               "  " + lpad(fmt(m.specificity, 2), 11) + "  " + lpad(fmt(m.macc, 2), 7) + "\n";
    }
    return out;
}

} // namespace phonocard
