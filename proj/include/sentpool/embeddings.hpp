#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sentpool/numkit.hpp"

namespace sentpool {

inline constexpr std::size_t kEmbeddingDim = 300;
inline constexpr double kOovRange = 0.25;

// How tokens missing from the pretrained vectors get their input vector.
// Each distinct token draws its own vector from U[-range, range]^dim using a
// generator seeded by derive_seed(seed, fnv1a(token)), so the vector depends
// only on (seed, token) and never on lookup order.
struct OovPolicy {
    double range = kOovRange;
    std::uint64_t seed = 0;
};

// Frozen token -> vector map. Training never writes to it; the only mutable
// state is the memo of OOV draws, which is guarded by a mutex.
class EmbeddingTable {
public:
    EmbeddingTable(std::vector<std::string> tokens, Matrix vectors, OovPolicy oov = {});

    EmbeddingTable(const EmbeddingTable& other);
    EmbeddingTable& operator=(const EmbeddingTable& other);
    EmbeddingTable(EmbeddingTable&&) noexcept;
    EmbeddingTable& operator=(EmbeddingTable&&) noexcept;
    ~EmbeddingTable();

    std::size_t dim() const noexcept { return vectors_.cols(); }
    std::size_t vocab_size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    const Matrix& vectors() const noexcept { return vectors_; }
    const OovPolicy& oov_policy() const noexcept { return oov_; }

    // Verbatim match first, then the ASCII-lowercased token.
    std::optional<std::size_t> index_of(std::string_view token) const;
    bool contains(std::string_view token) const { return index_of(token).has_value(); }

    Vector lookup(std::string_view token) const;
    void lookup_into(std::string_view token, std::span<double> out) const;

    // m x dim, row j = lookup(tokens[j]). Throws EmptyInput for m = 0.
    Matrix embed_sentence(const std::vector<std::string>& tokens) const;

    // FNV-1a over the pretrained vectors (not the OOV memo).
    std::uint64_t checksum() const noexcept { return fnv1a(vectors_.data()); }
    std::size_t oov_cache_size() const;

private:
    std::vector<std::string> tokens_;
    Matrix vectors_;
    OovPolicy oov_;
    std::unordered_map<std::string, std::size_t> index_;

    mutable std::unique_ptr<std::mutex> oov_mutex_;
    mutable std::unordered_map<std::string, Vector> oov_cache_;
};

struct LoadOptions {
    std::optional<std::size_t> expected_dim;
    OovPolicy oov;
    // When set, only these tokens are kept (the declared vocabulary is still
    // parsed and validated in full). Keeps memory bounded for the 3M-word
    // Google News file.
    const std::unordered_set<std::string>* keep = nullptr;
};

// Binary word2vec: "<count> <dim>\n", then per entry the token bytes, one
// 0x20, dim float32 little-endian, optionally 0x0A. Errors are ParseError with
// a byte offset, or DimensionError when expected_dim disagrees.
EmbeddingTable load_word2vec_binary(const std::filesystem::path& path, const LoadOptions& options = {});

// Text word2vec: optional "<count> <dim>" header line, then "token v1 .. vdim"
// per line. ParseError carries the 1-based line number.
EmbeddingTable load_word2vec_text(const std::filesystem::path& path, const LoadOptions& options = {});

void write_word2vec_binary(const EmbeddingTable& table, const std::filesystem::path& path);
void write_word2vec_text(const EmbeddingTable& table, const std::filesystem::path& path);

}  // namespace sentpool
