#include "phonocard/archive.hpp"

#include "io_util.hpp"
#include "phonocard/config.hpp"

#include <cstdio>
#include <sstream>

namespace phonocard {

namespace fs = std::filesystem;

void write_cycle_archive(const fs::path& dir, const std::vector<Cycle>& cycles, std::size_t cycle_length) {
    fs::create_directories(dir);
    std::string data;
    data.reserve(cycles.size() * cycle_length * 4);
    std::string index = "record_id,patient_id,label,cycle_index\n";
    for (const auto& c : cycles) {
        if (c.samples.size() != cycle_length) {
            throw ShapeError("cycle " + c.record_id + "#" + std::to_string(c.cycle_index) + " has " +
                             std::to_string(c.samples.size()) + " samples, expected " + std::to_string(cycle_length));
        }
        for (double v : c.samples) {
            detail::put_f32(data, static_cast<float>(v));
        }
        index += c.record_id + "," + c.patient_id + "," + std::string(label_name(c.label)) + "," +
                 std::to_string(c.cycle_index) + "\n";
    }
    detail::write_file_atomic(dir / "cycles.f32", data);
    detail::write_file_atomic(dir / "cycles_index.csv", index);
}

std::vector<Cycle> read_cycle_archive(const fs::path& dir, std::size_t cycle_length) {
    const auto bytes = detail::read_binary_file(dir / "cycles.f32");
    const auto lines = detail::split(detail::read_text_file(dir / "cycles_index.csv"), '\n');
    std::vector<Cycle> cycles;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string line = detail::trim(lines[i]);
        if (line.empty()) {
            continue;
        }
        const auto f = detail::split(line, ',');
        if (f.size() != 4) {
            throw FormatError("cycles_index.csv line " + std::to_string(i + 1) + ": expected 4 fields");
        }
        Cycle c;
        c.record_id = f[0];
        c.patient_id = f[1];
        c.label = parse_label_name(f[2]);
        try {
            c.cycle_index = std::stoi(f[3]);
        } catch (const std::exception&) {
            throw FormatError("cycles_index.csv line " + std::to_string(i + 1) + ": bad cycle index");
        }
        cycles.push_back(std::move(c));
    }
    if (bytes.size() != cycles.size() * cycle_length * 4) {
        throw FormatError("cycles.f32 holds " + std::to_string(bytes.size()) + " bytes but the index lists " +
                          std::to_string(cycles.size()) + " cycles of " + std::to_string(cycle_length));
    }
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        auto& s = cycles[i].samples;
        s.resize(cycle_length);
        for (std::size_t t = 0; t < cycle_length; ++t) {
            s[t] = detail::get_f32(bytes.data() + 4 * (i * cycle_length + t));
        }
    }
    return cycles;
}

void write_mfcc_archive(const fs::path& dir, const MfccArchive& archive) {
    fs::create_directories(dir);
    const std::size_t per = archive.frames * archive.config.n_coeffs;
    std::string data;
    data.reserve(archive.matrices.size() * per * 4);
    for (const auto& m : archive.matrices) {
        if (m.size() != per) {
            throw ShapeError("MFCC matrix has " + std::to_string(m.size()) + " values, expected " + std::to_string(per));
        }
        for (float v : m) {
            detail::put_f32(data, v);
        }
    }
    std::ostringstream meta;
    meta.precision(17);
    meta << archive.config.to_text() << "sample_rate = " << archive.sample_rate << "\n"
         << "frames = " << archive.frames << "\n"
         << "count = " << archive.matrices.size() << "\n";
    detail::write_file_atomic(dir / "mfcc.f32", data);
    detail::write_file_atomic(dir / "mfcc_config.txt", meta.str());
}

MfccArchive read_mfcc_archive(const fs::path& dir) {
    const auto kv = read_config_file(dir / "mfcc_config.txt");
    MfccArchive a;
    a.config = MfccConfig::from_map(kv);
    std::size_t count = 0;
    try {
        a.sample_rate = std::stod(kv.at("sample_rate"));
        a.frames = std::stoul(kv.at("frames"));
        count = std::stoul(kv.at("count"));
    } catch (const std::exception&) {
        throw FormatError("mfcc_config.txt lacks sample_rate, frames or count");
    }
    const auto bytes = detail::read_binary_file(dir / "mfcc.f32");
    const std::size_t per = a.frames * a.config.n_coeffs;
    if (bytes.size() != count * per * 4) {
        throw FormatError("mfcc.f32 size does not match its config (" + std::to_string(count) + " x " +
                          std::to_string(per) + " values)");
    }
    a.matrices.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        a.matrices[i].resize(per);
        for (std::size_t j = 0; j < per; ++j) {
            a.matrices[i][j] = detail::get_f32(bytes.data() + 4 * (i * per + j));
        }
    }
    return a;
}

ExampleSet make_example_set(const std::vector<Cycle>& cycles, const MfccArchive* mfcc, std::size_t cycle_length) {
    ExampleSet set;
    set.cycle_length = cycle_length;
    if (mfcc != nullptr) {
        if (mfcc->matrices.size() != cycles.size()) {
            throw FormatError("MFCC archive has " + std::to_string(mfcc->matrices.size()) + " entries for " +
                              std::to_string(cycles.size()) + " cycles");
        }
        set.mfcc_frames = mfcc->frames;
        set.mfcc_coeffs = mfcc->config.n_coeffs;
    }
    set.items.reserve(cycles.size());
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        const auto& c = cycles[i];
        Example e;
        e.cycle.assign(c.samples.begin(), c.samples.end());
        if (mfcc != nullptr) {
            e.mfcc = mfcc->matrices[i];
        }
        e.label = c.label;
        e.patient_id = c.patient_id;
        e.record_id = c.record_id;
        e.cycle_index = c.cycle_index;
        set.items.push_back(std::move(e));
    }
    set.validate();
    return set;
}

std::string config_digest(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace phonocard
