#include "sentpool/embeddings.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sentpool/errors.hpp"

namespace sentpool {

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

Vector draw_oov(const OovPolicy& oov, std::string_view token, std::size_t dim) {
    Rng rng(derive_seed(oov.seed, fnv1a(token)));
    Vector v(dim);
    for (auto& x : v) x = rng.uniform(-oov.range, oov.range);
    return v;
}

// Byte reader that keeps track of its offset for error reporting.
class ByteReader {
public:
    explicit ByteReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open '" + path.string() + "'");
    }

    std::size_t offset() const noexcept { return offset_; }

    // -1 at end of file.
    int peek() { return in_.peek(); }

    int get() {
        const int c = in_.get();
        if (c != std::char_traits<char>::eof()) ++offset_;
        return c;
    }

    bool read(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        const auto got = static_cast<std::size_t>(in_.gcount());
        offset_ += got;
        return got == n;
    }

private:
    std::ifstream in_;
    std::size_t offset_ = 0;
};

[[noreturn]] void byte_error(std::size_t offset, const std::string& what) {
    throw ParseError(ParseError::Unit::byte_offset, offset,
                     "word2vec binary: " + what + " at byte offset " + std::to_string(offset));
}

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
    throw ParseError(ParseError::Unit::line, line,
                     "word2vec text: " + what + " on line " + std::to_string(line));
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

void check_expected_dim(const LoadOptions& options, std::size_t dim) {
    if (options.expected_dim && *options.expected_dim != dim) {
        throw DimensionError("embedding dimension " + std::to_string(dim) + " does not match expected " +
                             std::to_string(*options.expected_dim));
    }
}

bool keep_token(const LoadOptions& options, const std::string& token) {
    return options.keep == nullptr || options.keep->contains(token);
}

}  // namespace

// --- EmbeddingTable ---------------------------------------------------------

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, Matrix vectors, OovPolicy oov)
    : tokens_(std::move(tokens)),
      vectors_(std::move(vectors)),
      oov_(oov),
      oov_mutex_(std::make_unique<std::mutex>()) {
    if (vectors_.rows() != tokens_.size()) {
        throw InvalidShape("EmbeddingTable: " + std::to_string(tokens_.size()) + " tokens for " +
                           vectors_.shape_string() + " vectors");
    }
    if (!tokens_.empty() && vectors_.cols() == 0) throw InvalidShape("EmbeddingTable: zero dimension");
    if (!(oov_.range >= 0.0)) throw InvalidConfig("EmbeddingTable: OOV range must be >= 0");
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], i).second) {
            throw ContractViolation("EmbeddingTable: duplicate token '" + tokens_[i] + "'");
        }
    }
}

EmbeddingTable::EmbeddingTable(const EmbeddingTable& other)
    : tokens_(other.tokens_),
      vectors_(other.vectors_),
      oov_(other.oov_),
      index_(other.index_),
      oov_mutex_(std::make_unique<std::mutex>()) {
    std::lock_guard lock(*other.oov_mutex_);
    oov_cache_ = other.oov_cache_;
}

EmbeddingTable& EmbeddingTable::operator=(const EmbeddingTable& other) {
    if (this != &other) {
        EmbeddingTable copy(other);
        *this = std::move(copy);
    }
    return *this;
}

EmbeddingTable::EmbeddingTable(EmbeddingTable&&) noexcept = default;
EmbeddingTable& EmbeddingTable::operator=(EmbeddingTable&&) noexcept = default;
EmbeddingTable::~EmbeddingTable() = default;

std::optional<std::size_t> EmbeddingTable::index_of(std::string_view token) const {
    if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
    if (auto it = index_.find(ascii_lower(token)); it != index_.end()) return it->second;
    return std::nullopt;
}

void EmbeddingTable::lookup_into(std::string_view token, std::span<double> out) const {
    if (out.size() != dim()) {
        throw InvalidShape("EmbeddingTable::lookup_into: output length " + std::to_string(out.size()) +
                           " vs dim " + std::to_string(dim()));
    }
    if (auto idx = index_of(token)) {
        const auto row = vectors_.row(*idx);
        std::copy(row.begin(), row.end(), out.begin());
        return;
    }
    std::lock_guard lock(*oov_mutex_);
    auto [it, inserted] = oov_cache_.try_emplace(std::string(token));
    if (inserted) it->second = draw_oov(oov_, token, dim());
    std::copy(it->second.begin(), it->second.end(), out.begin());
}

Vector EmbeddingTable::lookup(std::string_view token) const {
    Vector v(dim());
    lookup_into(token, v);
    return v;
}

Matrix EmbeddingTable::embed_sentence(const std::vector<std::string>& tokens) const {
    if (tokens.empty()) throw EmptyInput("embed_sentence: empty token list");
    Matrix xs(tokens.size(), dim());
    for (std::size_t j = 0; j < tokens.size(); ++j) lookup_into(tokens[j], xs.row(j));
    return xs;
}

std::size_t EmbeddingTable::oov_cache_size() const {
    std::lock_guard lock(*oov_mutex_);
    return oov_cache_.size();
}

// --- loaders ------------------------------------------------------------------

EmbeddingTable load_word2vec_binary(const std::filesystem::path& path, const LoadOptions& options) {
    ByteReader in(path);

    std::string header;
    for (;;) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) {
            byte_error(header.empty() ? 0 : in.offset(), "unterminated header");
        }
        if (c == '\n') break;
        header.push_back(static_cast<char>(c));
        if (header.size() > 128) byte_error(0, "header too long");
    }
    const auto fields = split_ws(header);
    std::size_t count = 0;
    std::size_t dim = 0;
    if (fields.size() != 2 || !parse_number(fields[0], count) || !parse_number(fields[1], dim) ||
        dim == 0) {
        byte_error(0, "malformed header '" + header + "'");
    }
    check_expected_dim(options, dim);

    std::vector<std::string> tokens;
    std::vector<double> values;
    if (options.keep == nullptr) {
        tokens.reserve(count);
        values.reserve(count * dim);
    }
    std::unordered_set<std::string> seen;
    std::vector<char> raw(dim * 4);

    for (std::size_t e = 0; e < count; ++e) {
        while (in.peek() == '\n') in.get();
        const std::size_t token_start = in.offset();
        std::string token;
        for (;;) {
            const int c = in.get();
            if (c == std::char_traits<char>::eof()) byte_error(in.offset(), "truncated token");
            if (c == ' ') break;
            token.push_back(static_cast<char>(c));
        }
        if (token.empty()) byte_error(token_start, "empty token");
        if (!seen.insert(token).second) byte_error(token_start, "duplicate token '" + token + "'");

        const std::size_t vec_start = in.offset();
        if (!in.read(raw.data(), raw.size())) byte_error(vec_start, "truncated vector for '" + token + "'");

        if (!keep_token(options, token)) continue;
        tokens.push_back(std::move(token));
        for (std::size_t k = 0; k < dim; ++k) {
            const auto* b = reinterpret_cast<const unsigned char*>(raw.data() + 4 * k);
            const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                       (static_cast<std::uint32_t>(b[1]) << 8) |
                                       (static_cast<std::uint32_t>(b[2]) << 16) |
                                       (static_cast<std::uint32_t>(b[3]) << 24);
            values.push_back(static_cast<double>(std::bit_cast<float>(bits)));
        }
    }
    while (in.peek() == '\n') in.get();
    if (in.peek() != std::char_traits<char>::eof()) byte_error(in.offset(), "trailing data");

    const std::size_t rows = tokens.size();
    return EmbeddingTable(std::move(tokens), Matrix(rows, dim, std::move(values)), options.oov);
}

EmbeddingTable load_word2vec_text(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    std::vector<std::string> tokens;
    std::vector<double> values;
    std::unordered_set<std::string> seen;
    std::optional<std::size_t> declared_count;
    std::size_t dim = options.expected_dim.value_or(0);
    std::size_t entries = 0;
    std::size_t line_no = 0;
    std::string line;

    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;

        if (line_no == 1 && fields.size() == 2) {
            std::size_t c = 0;
            std::size_t d = 0;
            if (parse_number(fields[0], c) && parse_number(fields[1], d)) {
                if (d == 0) line_error(line_no, "zero dimension in header");
                check_expected_dim(options, d);
                declared_count = c;
                dim = d;
                continue;
            }
        }
        if (dim == 0) dim = fields.size() - 1;
        if (dim == 0 || fields.size() != dim + 1) {
            line_error(line_no, "expected " + std::to_string(dim + 1) + " fields, found " +
                                    std::to_string(fields.size()));
        }
        std::string token(fields[0]);
        if (!seen.insert(token).second) line_error(line_no, "duplicate token '" + token + "'");
        ++entries;
        const bool keep = keep_token(options, token);
        if (keep) tokens.push_back(std::move(token));
        for (std::size_t k = 0; k < dim; ++k) {
            double v = 0.0;
            if (!parse_number(fields[k + 1], v)) {
                line_error(line_no, "bad number '" + std::string(fields[k + 1]) + "'");
            }
            if (keep) values.push_back(v);
        }
    }
    if (entries == 0) line_error(line_no, "no entries");
    if (declared_count && *declared_count != entries) {
        line_error(line_no, "header declares " + std::to_string(*declared_count) + " entries, found " +
                                std::to_string(entries));
    }
    check_expected_dim(options, dim);

    const std::size_t rows = tokens.size();
    return EmbeddingTable(std::move(tokens), Matrix(rows, dim, std::move(values)), options.oov);
}

void write_word2vec_binary(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << table.vocab_size() << ' ' << table.dim() << '\n';
    for (std::size_t i = 0; i < table.vocab_size(); ++i) {
        out << table.tokens()[i] << ' ';
        for (double v : table.vectors().row(i)) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
            const char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                               static_cast<char>((bits >> 16) & 0xff), static_cast<char>(bits >> 24)};
            out.write(b, 4);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_word2vec_text(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << table.vocab_size() << ' ' << table.dim() << '\n';
    char buf[40];
    for (std::size_t i = 0; i < table.vocab_size(); ++i) {
        out << table.tokens()[i];
        for (double v : table.vectors().row(i)) {
            std::snprintf(buf, sizeof buf, " %.17g", v);
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace sentpool
