#include "phonocard/signal_io.hpp"

#include "io_util.hpp"
#include "phonocard/error.hpp"
#include "phonocard/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace phonocard {

namespace fs = std::filesystem;
using detail::get_u32;
using detail::split;
using detail::trim;

std::string_view label_name(Label label) {
    return label == Label::Normal ? "Normal" : "Abnormal";
}

Label parse_label_name(std::string_view text) {
    if (text == "Normal") {
        return Label::Normal;
    }
    if (text == "Abnormal") {
        return Label::Abnormal;
    }
    throw LabelError("unknown label '" + std::string(text) + "'");
}

namespace {

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

bool parse_int(std::string_view text, long& value) {
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    return ec == std::errc() && ptr == end;
}

} // namespace

Recording read_wav(const fs::path& path) {
    const auto bytes = detail::read_binary_file(path);
    const std::string name = path.string();
    if (bytes.size() < 12 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != "RIFF" ||
        std::string_view(reinterpret_cast<const char*>(bytes.data() + 8), 4) != "WAVE") {
        throw FormatError(name + ": not a RIFF/WAVE file");
    }

    bool have_fmt = false;
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t rate = 0;
    std::uint16_t bits = 0;
    const std::uint8_t* data = nullptr;
    std::uint32_t data_size = 0;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::string_view id(reinterpret_cast<const char*>(bytes.data() + pos), 4);
        const std::uint32_t size = get_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) {
            throw FormatError(name + ": chunk '" + std::string(id) + "' runs past end of file");
        }
        if (id == "fmt ") {
            if (size < 16) {
                throw FormatError(name + ": fmt chunk too small");
            }
            format = get_u16(bytes.data() + body);
            channels = get_u16(bytes.data() + body + 2);
            rate = get_u32(bytes.data() + body + 4);
            bits = get_u16(bytes.data() + body + 14);
            if (format == 0xFFFE && size >= 26) {
                // WAVE_FORMAT_EXTENSIBLE: the sub-format GUID starts with the real tag.
                format = get_u16(bytes.data() + body + 24);
            }
            have_fmt = true;
        } else if (id == "data") {
            data = bytes.data() + body;
            data_size = size;
            have_data = true;
        }
        pos = body + size + (size & 1u);
    }

    if (!have_fmt || !have_data) {
        throw FormatError(name + ": missing fmt or data chunk");
    }
    if (format != 1 || bits != 16) {
        throw FormatError(name + ": only 16-bit integer PCM is supported");
    }
    if (channels != 1) {
        throw UnsupportedChannels(name + ": " + std::to_string(channels) + " channels, expected 1");
    }
    if (rate == 0) {
        throw FormatError(name + ": zero sample rate");
    }
    if (data_size == 0) {
        throw EmptyRecording(name + ": empty data chunk");
    }

    Recording rec;
    rec.sample_rate = static_cast<int>(rate);
    rec.samples.resize(data_size / 2);
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        const auto code = static_cast<std::int16_t>(get_u16(data + 2 * i));
        rec.samples[i] = static_cast<double>(code) / 32768.0;
    }
    rec.id = path.stem().string();
    return rec;
}

void write_wav(const fs::path& path, std::span<const double> samples, int sample_rate) {
    if (sample_rate <= 0) {
        throw FormatError("sample rate must be positive");
    }
    const auto data_size = static_cast<std::uint32_t>(samples.size() * 2);
    std::string out;
    out.reserve(44 + data_size);
    auto put_u16 = [&out](std::uint16_t v) {
        out.push_back(static_cast<char>(v & 0xFF));
        out.push_back(static_cast<char>(v >> 8));
    };
    out += "RIFF";
    detail::put_u32(out, 36 + data_size);
    out += "WAVEfmt ";
    detail::put_u32(out, 16);
    put_u16(1);
    put_u16(1);
    detail::put_u32(out, static_cast<std::uint32_t>(sample_rate));
    detail::put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
    put_u16(2);
    put_u16(16);
    out += "data";
    detail::put_u32(out, data_size);
    for (double s : samples) {
        const double code = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
        put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(code)));
    }
    detail::write_file_atomic(path, out);
}

std::map<std::string, Label> read_labels(const fs::path& path) {
    std::istringstream in(detail::read_text_file(path));
    std::map<std::string, Label> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(line, ',');
        long code = 0;
        if (fields.size() < 2 || !parse_int(fields[1], code)) {
            if (line_no == 1) {
                continue;  // header
            }
            throw LabelError(path.string() + ":" + std::to_string(line_no) + ": malformed line");
        }
        if (code != -1 && code != 1) {
            throw LabelError(path.string() + ":" + std::to_string(line_no) + ": code " + fields[1] +
                             " outside {-1, 1}");
        }
        const auto [it, inserted] = labels.emplace(fields[0], code == 1 ? Label::Abnormal : Label::Normal);
        if (!inserted) {
            throw DuplicateRecord(path.string() + ": duplicate record '" + fields[0] + "'");
        }
    }
    return labels;
}

void DatasetManifest::add(ManifestEntry entry) {
    for (const auto& r : recordings) {
        if (r.id == entry.id) {
            throw DuplicateRecord("duplicate record '" + entry.id + "' in manifest");
        }
    }
    ++class_counts[entry.label];
    recordings.push_back(std::move(entry));
}

std::set<std::string> DatasetManifest::patients() const {
    std::set<std::string> out;
    for (const auto& r : recordings) {
        out.insert(r.patient_id);
    }
    return out;
}

std::string patient_id_from_record(std::string_view record_id) {
    const auto pos = record_id.find_first_of("_-");
    if (pos == std::string_view::npos || pos == 0) {
        return std::string(record_id);
    }
    return std::string(record_id.substr(0, pos));
}

DatasetManifest build_manifest(const fs::path& data_root) {
    if (!fs::is_directory(data_root)) {
        throw IoError("data root " + data_root.string() + " is not a directory");
    }
    std::vector<fs::path> wavs;
    std::vector<fs::path> label_files;
    fs::path patient_table;
    for (const auto& entry : fs::recursive_directory_iterator(data_root)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const auto& p = entry.path();
        std::string ext = p.extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        const std::string stem = p.stem().string();
        if (ext == ".wav") {
            wavs.push_back(p);
        } else if (ext == ".csv" && stem.rfind("REFERENCE", 0) == 0) {
            label_files.push_back(p);
        } else if (p.filename() == "patients.csv") {
            patient_table = p;
        }
    }
    std::sort(wavs.begin(), wavs.end());
    std::sort(label_files.begin(), label_files.end());

    std::map<std::string, Label> labels;
    for (const auto& file : label_files) {
        for (const auto& [id, label] : read_labels(file)) {
            if (!labels.emplace(id, label).second) {
                throw DuplicateRecord("record '" + id + "' labeled in more than one file");
            }
        }
    }

    std::map<std::string, std::string> patient_of;
    if (!patient_table.empty()) {
        std::istringstream in(detail::read_text_file(patient_table));
        std::string line;
        while (std::getline(in, line)) {
            const auto fields = split(line, ',');
            if (fields.size() >= 2 && !fields[0].empty() && fields[0] != "record_id") {
                patient_of[fields[0]] = fields[1];
            }
        }
    }

    DatasetManifest manifest;
    for (const auto& wav : wavs) {
        const std::string id = wav.stem().string();
        const auto it = labels.find(id);
        if (it == labels.end()) {
            continue;
        }
        const auto pit = patient_of.find(id);
        manifest.add({id, fs::relative(wav, data_root),
                      pit != patient_of.end() ? pit->second : patient_id_from_record(id), it->second});
    }
    return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
    std::string out = "id,path,patient,label\n";
    for (const auto& r : manifest.recordings) {
        out += r.id + "," + r.path.generic_string() + "," + r.patient_id + "," +
               std::string(label_name(r.label)) + "\n";
    }
    detail::write_file_atomic(path, out);
}

DatasetManifest read_manifest(const fs::path& path) {
    std::istringstream in(detail::read_text_file(path));
    DatasetManifest manifest;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 4) {
            throw FormatError(path.string() + ": malformed manifest line '" + line + "'");
        }
        manifest.add({f[0], f[1], f[2], parse_label_name(f[3])});
    }
    return manifest;
}

std::vector<FoldSplit> make_folds(const DatasetManifest& manifest, int n_folds, double train_frac,
                                  std::uint64_t seed) {
    if (n_folds < 1) {
        throw ConfigError("n_folds must be at least 1");
    }
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw ConfigError("train_frac must lie in (0, 1)");
    }
    for (const auto& r : manifest.recordings) {
        if (r.patient_id.empty()) {
            throw InsufficientData("record '" + r.id + "' has no patient id");
        }
    }
    const auto patient_set = manifest.patients();
    if (patient_set.size() < 2) {
        throw InsufficientData("at least two patients are needed to split folds");
    }
    const std::vector<std::string> patients(patient_set.begin(), patient_set.end());
    const auto n = patients.size();
    auto n_test = static_cast<std::size_t>(std::llround((1.0 - train_frac) * static_cast<double>(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

    std::vector<FoldSplit> folds;
    for (int f = 0; f < n_folds; ++f) {
        std::vector<std::string> order = patients;
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(f));
        shuffle(std::span<std::string>(order), rng);
        FoldSplit split_;
        split_.fold_index = f;
        split_.seed = seed;
        split_.test_patients.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
        split_.train_patients.insert(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
        folds.push_back(std::move(split_));
    }
    return folds;
}

void write_folds(const fs::path& path, const std::vector<FoldSplit>& folds) {
    std::string out = "fold,patient,split\n";
    for (const auto& f : folds) {
        for (const auto& p : f.train_patients) {
            out += std::to_string(f.fold_index) + "," + p + ",train\n";
        }
        for (const auto& p : f.test_patients) {
            out += std::to_string(f.fold_index) + "," + p + ",test\n";
        }
    }
    detail::write_file_atomic(path, out);
}

std::vector<FoldSplit> read_folds(const fs::path& path) {
    std::istringstream in(detail::read_text_file(path));
    std::map<int, FoldSplit> by_index;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split(line, ',');
        long idx = 0;
        if (f.size() != 3 || !parse_int(f[0], idx)) {
            throw FormatError(path.string() + ": malformed fold line '" + line + "'");
        }
        auto& fold = by_index[static_cast<int>(idx)];
        fold.fold_index = static_cast<int>(idx);
        if (f[2] == "train") {
            fold.train_patients.insert(f[1]);
        } else if (f[2] == "test") {
            fold.test_patients.insert(f[1]);
        } else {
            throw FormatError(path.string() + ": unknown split '" + f[2] + "'");
        }
    }
    std::vector<FoldSplit> folds;
    for (auto& [idx, fold] : by_index) {
        folds.push_back(std::move(fold));
    }
    return folds;
}

} // namespace phonocard
