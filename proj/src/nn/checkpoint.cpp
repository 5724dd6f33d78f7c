#include "phonocard/nn/checkpoint.hpp"

#include "io_util.hpp"

#include <string_view>

namespace phonocard::nn {

namespace {

constexpr std::string_view kMagic = "PCGK";

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    const std::uint8_t* take(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(std::string("checkpoint truncated while reading ") + what);
        }
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint32_t u32(const char* what) { return detail::get_u32(take(4, what)); }
    std::string text(std::size_t n, const char* what) {
        const auto* p = take(n, what);
        return std::string(reinterpret_cast<const char*>(p), n);
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

std::string manifest_text(const std::map<std::string, std::string>& manifest) {
    std::string out;
    for (const auto& [k, v] : manifest) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw FormatError("checkpoint manifest entry '" + k + "' contains a reserved character");
        }
        out += k + "=" + v + "\n";
    }
    return out;
}

} // namespace

const Tensor<float>* Checkpoint::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) {
            return &t.tensor;
        }
    }
    return nullptr;
}

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
    std::string out(kMagic);
    detail::put_u32(out, Checkpoint::kVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    const std::string manifest = manifest_text(ckpt.manifest);
    detail::put_u32(out, static_cast<std::uint32_t>(manifest.size()));
    out += manifest;
    for (const auto& [name, tensor] : ckpt.tensors) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        detail::put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t d : tensor.shape()) {
            detail::put_u32(out, static_cast<std::uint32_t>(d));
        }
        for (float v : tensor.values()) {
            detail::put_f32(out, v);
        }
    }
    return {out.begin(), out.end()};
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes) {
    Reader in(bytes);
    if (in.text(kMagic.size(), "magic") != kMagic) {
        throw FormatError("not a checkpoint file (bad magic)");
    }
    const std::uint32_t version = in.u32("version");
    if (version != Checkpoint::kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t count = in.u32("tensor count");
    Checkpoint ckpt;
    const std::uint32_t manifest_len = in.u32("manifest length");
    for (const auto& line : detail::split(in.text(manifest_len, "manifest"), '\n')) {
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("malformed checkpoint manifest line '" + line + "'");
        }
        ckpt.manifest[line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor nt;
        nt.name = in.text(in.u32("name length"), "tensor name");
        const std::uint32_t rank = in.u32("rank");
        Shape shape(rank);
        std::size_t n = 1;
        for (auto& d : shape) {
            d = in.u32("dimension");
            n *= d;
        }
        if (n > bytes.size()) {
            throw FormatError("checkpoint tensor '" + nt.name + "' claims more values than the file holds");
        }
        const std::uint8_t* p = in.take(4 * n, "tensor values");
        std::vector<float> values(n);
        for (std::size_t j = 0; j < n; ++j) {
            values[j] = detail::get_f32(p + 4 * j);
        }
        nt.tensor = Tensor<float>(std::move(shape), std::move(values));
        ckpt.tensors.push_back(std::move(nt));
    }
    if (!in.done()) {
        throw FormatError("trailing bytes after checkpoint tensors");
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto bytes = serialize(ckpt);
    detail::write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return deserialize(detail::read_binary_file(path));
}

} // namespace phonocard::nn
