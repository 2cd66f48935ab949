#include "sentpool/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sentpool/errors.hpp"

namespace sentpool {

namespace {

template <class T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Cursor {
public:
    explicit Cursor(std::string bytes) : bytes_(std::move(bytes)) {}

    std::size_t offset() const noexcept { return pos_; }
    bool at_end() const noexcept { return pos_ == bytes_.size(); }

    std::string_view take(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw ParseError(ParseError::Unit::byte_offset, pos_,
                             std::string("checkpoint: truncated ") + what + " at byte offset " +
                                 std::to_string(pos_));
        }
        std::string_view out(bytes_.data() + pos_, n);
        pos_ += n;
        return out;
    }

    template <class T>
    T get_le(const char* what) {
        const auto raw = take(sizeof(T), what);
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(static_cast<unsigned char>(raw[i])) << (8 * i);
        }
        return v;
    }

private:
    std::string bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

const Matrix& Checkpoint::at(std::string_view name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t.value;
    }
    throw ContractViolation("checkpoint has no tensor named '" + std::string(name) + "'");
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.metadata.size()));
    out += checkpoint.metadata;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
    for (const auto& t : checkpoint.tensors) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out += t.name;
        put_le<std::uint64_t>(out, t.value.rows());
        put_le<std::uint64_t>(out, t.value.cols());
        for (double v : t.value.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw IoError("cannot write '" + tmp.string() + "'");
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    Cursor in(std::string(std::istreambuf_iterator<char>(f), {}));

    const auto magic = in.take(sizeof kCheckpointMagic, "magic");
    if (std::memcmp(magic.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
        throw ParseError(ParseError::Unit::byte_offset, 0, "checkpoint: bad magic bytes");
    }
    const std::size_t version_at = in.offset();
    const auto version = in.get_le<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw ParseError(ParseError::Unit::byte_offset, version_at,
                         "checkpoint: unsupported version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const auto meta_len = in.get_le<std::uint32_t>("metadata length");
    ckpt.metadata = std::string(in.take(meta_len, "metadata"));
    const auto count = in.get_le<std::uint32_t>("tensor count");
    for (std::uint32_t k = 0; k < count; ++k) {
        NamedTensor t;
        const auto name_len = in.get_le<std::uint32_t>("tensor name length");
        t.name = std::string(in.take(name_len, "tensor name"));
        const auto rows = in.get_le<std::uint64_t>("tensor rows");
        const auto cols = in.get_le<std::uint64_t>("tensor cols");
        if (cols != 0 && rows > (std::uint64_t{1} << 60) / cols) {
            throw ParseError(ParseError::Unit::byte_offset, in.offset(), "checkpoint: implausible tensor shape");
        }
        const auto payload = in.take(rows * cols * 8, "tensor payload");
        std::vector<double> values(rows * cols);
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::uint64_t bits = 0;
            for (std::size_t b = 0; b < 8; ++b) {
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(payload[8 * i + b])) << (8 * b);
            }
            values[i] = std::bit_cast<double>(bits);
        }
        t.value = Matrix(rows, cols, std::move(values));
        ckpt.tensors.push_back(std::move(t));
    }
    if (!in.at_end()) {
        throw ParseError(ParseError::Unit::byte_offset, in.offset(), "checkpoint: trailing bytes");
    }
    return ckpt;
}

}  // namespace sentpool
