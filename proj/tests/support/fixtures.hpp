#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "sentpool/data.hpp"
#include "sentpool/embeddings.hpp"
#include "sentpool/numkit.hpp"
#include "sentpool/rnn_core.hpp"

namespace sentpool::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("sentpool_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Independent word2vec binary writer: explicit little-endian byte packing,
// no use of the library's writer.
inline std::string word2vec_binary_bytes(const std::vector<std::string>& words,
                                         const std::vector<std::vector<float>>& vectors, bool trailing_newline = true) {
    std::string out = std::to_string(words.size()) + " " + std::to_string(vectors.empty() ? 0 : vectors[0].size()) + "\n";
    for (std::size_t w = 0; w < words.size(); ++w) {
        out += words[w];
        out += ' ';
        for (float f : vectors[w]) {
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
        }
        if (trailing_newline) out += '\n';
    }
    return out;
}

// Random hidden sequence without forward caches, for head-only tests.
inline HiddenSequence random_sequence(Rng& rng, std::size_t m, std::size_t hidden, Body body = Body::lstm) {
    const std::size_t width = body == Body::blstm ? 2 * hidden : hidden;
    Matrix states(m, width);
    for (auto& v : states.data()) v = rng.uniform(-1.0, 1.0);
    return HiddenSequence(body, hidden, std::move(states), {});
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double bound = 1.0) {
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = rng.uniform(-bound, bound);
    return m;
}

// Two classes keyed by disjoint token sets; 20 sentences each of 3-6 tokens.
struct ToyCorpus {
    std::vector<Example> examples;
    EmbeddingTable embeddings;
};

inline ToyCorpus make_toy_corpus(std::size_t dim = kEmbeddingDim, std::uint64_t seed = 7) {
    const std::vector<std::string> words[2] = {{"alpha", "bravo", "charlie", "delta", "echo"},
                                               {"golf", "hotel", "india", "juliet", "kilo"}};
    Rng rng(seed);
    std::vector<std::string> vocab;
    for (const auto& ws : words) vocab.insert(vocab.end(), ws.begin(), ws.end());
    Matrix vectors(vocab.size(), dim);
    for (auto& v : vectors.data()) v = rng.uniform(-0.25, 0.25);

    std::vector<Example> examples;
    for (std::size_t i = 0; i < 40; ++i) {
        const std::size_t label = i % 2;
        const std::size_t len = 3 + rng.below(4);
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
            if (t) text += ' ';
            text += words[label][rng.below(words[label].size())];
        }
        examples.push_back(make_example(text, label, Split::train));
    }
    return {std::move(examples), EmbeddingTable(vocab, std::move(vectors))};
}

}  // namespace sentpool::testing
