#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sentpool {

// Bumped whenever tokenize() changes behaviour; stamped into run metadata.
inline constexpr std::string_view kTokenizerVersion = "tok-v1";

// Rules, applied in order:
//  - ASCII letters are lowercased; bytes >= 0x80 pass through untouched.
//  - Whitespace separates tokens.
//  - A run of letters, digits and non-ASCII bytes forms a word.
//  - "n't" at the end of a word is split off ("don't" -> "do", "n't").
//  - An apostrophe followed by s, ve, re, d, ll or m (and then a word
//    boundary) forms one clitic token ("'s").
//  - Every other ASCII punctuation character is a token by itself.
//  - Remaining control characters are dropped.
std::vector<std::string> tokenize(std::string_view text);

// Replaces bytes that are not valid UTF-8 with U+FFFD. Returns the cleaned
// string and how many replacements were made.
std::pair<std::string, std::size_t> sanitize_utf8(std::string_view raw);

enum class Split { train, dev, test, unsplit };

std::string_view to_string(Split split) noexcept;
std::optional<Split> parse_split(std::string_view s) noexcept;

struct Example {
    std::string text;
    std::vector<std::string> tokens;
    std::size_t label = 0;
    Split split = Split::unsplit;

    friend bool operator==(const Example&, const Example&) = default;
};

Example make_example(std::string text, std::size_t label, Split split = Split::unsplit);

struct Corpus {
    std::string name;
    std::size_t classes = 0;
    std::vector<Example> examples;
    bool has_standard_split = false;
    // Load diagnostics; not part of equality.
    std::size_t rejected_empty = 0;
    std::size_t replaced_bytes = 0;

    std::size_t count(Split split) const noexcept;
    std::vector<Example> subset(Split split) const;

    friend bool operator==(const Corpus& a, const Corpus& b) {
        return a.name == b.name && a.classes == b.classes && a.examples == b.examples &&
               a.has_standard_split == b.has_standard_split;
    }
};

// Published statistics for one of the six benchmark corpora, plus the order
// in which `prepare` expects its raw source files.
struct DatasetInfo {
    std::string_view name;
    std::size_t classes;
    std::size_t size;
    std::optional<std::size_t> test_size;  // nullopt: cross-validated
    std::vector<std::string_view> label_names;
    std::vector<std::string_view> source_roles;
};

const std::vector<DatasetInfo>& known_datasets();
// Throws InvalidConfig for an unknown name.
const DatasetInfo& dataset_info(std::string_view name);

// Raw-format adapters. Source file order per dataset:
//   MR    rt-polarity.pos, rt-polarity.neg      one sentence per line
//   SST-1 train, dev, test                      "<0-4> <sentence>" per line
//   SST-2 train, dev, test (same 5-way files)   0,1 -> 0; 3,4 -> 1; 2 dropped
//   TREC  train_5500.label, TREC_10.label       "COARSE:fine question"
//   Subj  subjective file, objective file       one sentence per line
//   CR    positive file, negative file          one sentence per line
// Blank lines are skipped. With check_integrity the result must match the
// published statistics exactly, otherwise IntegrityError.
Corpus load_dataset(std::string_view name, const std::vector<std::filesystem::path>& sources,
                    bool check_integrity = true);

// Throws IntegrityError listing every expected-vs-found mismatch.
void check_integrity(const Corpus& corpus);

struct FoldPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> assignments;  // example index -> fold id

    std::vector<std::size_t> fold_sizes() const;
    std::vector<std::size_t> indices_in(std::size_t fold) const;
    std::vector<std::size_t> indices_outside(std::size_t fold) const;
};

inline constexpr std::size_t kFolds = 10;
inline constexpr double kDevFraction = 0.10;

// Seeded shuffle, then round-robin fold assignment.
FoldPlan make_folds(const Corpus& corpus, std::size_t k = kFolds, std::uint64_t seed = 0);

// Seeded shuffle; round(fraction * n) examples go to dev. Split tags of the
// returned examples are set to train / dev; relative order is preserved.
std::pair<std::vector<Example>, std::vector<Example>> dev_split(const std::vector<Example>& train,
                                                                double fraction = kDevFraction,
                                                                std::uint64_t seed = 0);

// One JSON object per line: {"text": str, "label": int, "split": str?}.
void export_jsonl(const Corpus& corpus, const std::filesystem::path& path);
// Tokens are recomputed from text. For a known dataset name the class count
// comes from its statistics, otherwise it is max(label) + 1.
Corpus import_jsonl(const std::filesystem::path& path, std::string_view name);

}  // namespace sentpool
