#include "phonocard/signal_io.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>

using namespace phonocard;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("phonocard_sio_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

void put16(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xFF));
    s.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& s, std::uint32_t v) {
    put16(s, static_cast<std::uint16_t>(v & 0xFFFF));
    put16(s, static_cast<std::uint16_t>(v >> 16));
}

// Hand-assembled PCM16 file, independent of write_wav.
void raw_wav(const fs::path& p, const std::vector<std::int16_t>& codes, std::uint16_t channels = 1,
             bool extra_chunk = false) {
    std::string body = "WAVEfmt ";
    put32(body, 16);
    put16(body, 1);
    put16(body, channels);
    put32(body, 2000);
    put32(body, 2000 * 2 * channels);
    put16(body, static_cast<std::uint16_t>(2 * channels));
    put16(body, 16);
    if (extra_chunk) {
        body += "LIST";
        put32(body, 3);
        body += "abc";
        body.push_back('\0');
    }
    body += "data";
    put32(body, static_cast<std::uint32_t>(codes.size() * 2));
    for (auto c : codes) put16(body, static_cast<std::uint16_t>(c));
    std::string file = "RIFF";
    put32(file, static_cast<std::uint32_t>(body.size()));
    file += body;
    std::ofstream(p, std::ios::binary) << file;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

} // namespace

TEST(ReadWav, ScalesPcmCodes) {
    TempDir dir;
    raw_wav(dir.path() / "x.wav", {0, 16384, -16384, 32767});
    const auto rec = read_wav(dir.path() / "x.wav");
    EXPECT_EQ(rec.sample_rate, 2000);
    ASSERT_EQ(rec.samples.size(), 4u);
    EXPECT_EQ(rec.samples[0], 0.0);
    EXPECT_EQ(rec.samples[1], 0.5);
    EXPECT_EQ(rec.samples[2], -0.5);
    EXPECT_NEAR(rec.samples[3], 0.99997, 1e-5);
}

TEST(ReadWav, SkipsUnknownChunks) {
    TempDir dir;
    raw_wav(dir.path() / "x.wav", {1, 2, 3}, 1, true);
    EXPECT_EQ(read_wav(dir.path() / "x.wav").samples.size(), 3u);
}

TEST(ReadWav, RejectsStereoEmptyAndGarbage) {
    TempDir dir;
    raw_wav(dir.path() / "s.wav", {1, 2, 3, 4}, 2);
    EXPECT_THROW(read_wav(dir.path() / "s.wav"), UnsupportedChannels);
    raw_wav(dir.path() / "e.wav", {});
    EXPECT_THROW(read_wav(dir.path() / "e.wav"), EmptyRecording);
    write_text(dir.path() / "g.wav", "definitely not audio");
    EXPECT_THROW(read_wav(dir.path() / "g.wav"), FormatError);
    EXPECT_THROW(read_wav(dir.path() / "missing.wav"), IoError);
}

TEST(WriteWav, RoundTripWithinOneCode) {
    TempDir dir;
    Rng rng = make_rng(3);
    std::vector<double> x(1000);
    for (double& v : x) v = uniform(rng, -1.0, 1.0);
    write_wav(dir.path() / "r.wav", x, 1000);
    const auto back = read_wav(dir.path() / "r.wav");
    ASSERT_EQ(back.samples.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_LE(std::abs(back.samples[i] - x[i]), 1.0 / 32768.0);
    }
}

TEST(ReadLabels, CodesHeaderAndErrors) {
    TempDir dir;
    write_text(dir.path() / "ref.csv", "record,label\na0001,-1\na0002,1\n");
    const auto labels = read_labels(dir.path() / "ref.csv");
    ASSERT_EQ(labels.size(), 2u);
    EXPECT_EQ(labels.at("a0001"), Label::Normal);
    EXPECT_EQ(labels.at("a0002"), Label::Abnormal);

    write_text(dir.path() / "bad.csv", "a0001,7\n");
    EXPECT_THROW(read_labels(dir.path() / "bad.csv"), LabelError);
    write_text(dir.path() / "dup.csv", "a0001,1\na0001,-1\n");
    EXPECT_THROW(read_labels(dir.path() / "dup.csv"), DuplicateRecord);
}

TEST(PatientId, PrefixRule) {
    EXPECT_EQ(patient_id_from_record("p12_rec3"), "p12");
    EXPECT_EQ(patient_id_from_record("p12-rec3"), "p12");
    EXPECT_EQ(patient_id_from_record("a0001"), "a0001");
}

TEST(Manifest, BuildsFromCorpusAndRoundTrips) {
    TempDir dir;
    phonocard::testing::write_toy_corpus(dir.path() / "data", 3, 3.0, 2000, 1);
    write_text(dir.path() / "data" / "patients.csv", "a0001,alice\na0003,alice\n");
    const auto m = build_manifest(dir.path() / "data");
    ASSERT_EQ(m.recordings.size(), 6u);
    EXPECT_EQ(m.class_counts.at(Label::Normal), 3u);
    EXPECT_EQ(m.class_counts.at(Label::Abnormal), 3u);
    EXPECT_EQ(m.patients().size(), 5u);
    write_manifest(dir.path() / "manifest.csv", m);
    const auto back = read_manifest(dir.path() / "manifest.csv");
    ASSERT_EQ(back.recordings.size(), m.recordings.size());
    for (std::size_t i = 0; i < m.recordings.size(); ++i) {
        EXPECT_EQ(back.recordings[i].id, m.recordings[i].id);
        EXPECT_EQ(back.recordings[i].patient_id, m.recordings[i].patient_id);
        EXPECT_EQ(back.recordings[i].label, m.recordings[i].label);
        EXPECT_EQ(back.recordings[i].path, m.recordings[i].path);
    }
}

TEST(Manifest, DuplicateIdsRejected) {
    DatasetManifest m;
    m.add({"a", "a.wav", "a", Label::Normal});
    EXPECT_THROW(m.add({"a", "b.wav", "a", Label::Normal}), DuplicateRecord);
}

namespace {

DatasetManifest patients_manifest(std::size_t n) {
    DatasetManifest m;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = "p" + std::to_string(i);
        m.add({id, id + ".wav", id, i % 3 == 0 ? Label::Abnormal : Label::Normal});
    }
    return m;
}

} // namespace

TEST(Folds, TenPatientsOneFold) {
    const auto folds = make_folds(patients_manifest(10), 1, 0.9, 5);
    ASSERT_EQ(folds.size(), 1u);
    EXPECT_EQ(folds[0].train_patients.size(), 9u);
    EXPECT_EQ(folds[0].test_patients.size(), 1u);
}

TEST(Folds, CorpusSizedSplitIsDisjointAndCovering) {
    const auto m = patients_manifest(764);
    const auto folds = make_folds(m, 4, 0.9, 11);
    ASSERT_EQ(folds.size(), 4u);
    for (const auto& f : folds) {
        EXPECT_GE(f.test_patients.size(), 76u);
        EXPECT_LE(f.test_patients.size(), 77u);
        EXPECT_EQ(f.train_patients.size() + f.test_patients.size(), 764u);
        for (const auto& p : f.test_patients) {
            EXPECT_EQ(f.train_patients.count(p), 0u);
        }
    }
    EXPECT_NE(folds[0].test_patients, folds[1].test_patients);
}

TEST(Folds, DeterministicAndSerializable) {
    TempDir dir;
    const auto m = patients_manifest(40);
    const auto a = make_folds(m, 4, 0.75, 9);
    const auto b = make_folds(m, 4, 0.75, 9);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].test_patients, b[i].test_patients);
    }
    write_folds(dir.path() / "folds.csv", a);
    const auto back = read_folds(dir.path() / "folds.csv");
    ASSERT_EQ(back.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(back[i].train_patients, a[i].train_patients);
        EXPECT_EQ(back[i].test_patients, a[i].test_patients);
    }
}

TEST(Folds, NeedsTwoPatients) {
    EXPECT_THROW(make_folds(patients_manifest(1), 1, 0.9, 0), InsufficientData);
}
