#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "sentpool/data.hpp"
#include "sentpool/errors.hpp"
#include "sentpool/numkit.hpp"
#include "support/fixtures.hpp"
#include "support/raw_corpora.hpp"

using namespace sentpool;
using sentpool::testing::TempDir;

namespace {

using Tokens = std::vector<std::string>;

std::string join(const Tokens& tokens) {
    std::string s;
    for (const auto& t : tokens) s += (s.empty() ? "" : " ") + t;
    return s;
}

Corpus synthetic_cv_corpus(std::size_t n, std::size_t classes = 2) {
    Corpus c;
    c.name = "toy";
    c.classes = classes;
    for (std::size_t i = 0; i < n; ++i) c.examples.push_back(make_example("item " + std::to_string(i), i % classes));
    return c;
}

std::string random_utf8_text(Rng& rng) {
    static const std::vector<std::string> pieces = {
        "a", "Z", "9", " ", "\"", "'", "\\", "/", "{", "}", ",", ":", "\t", "é", "ß", "中文", "😀", "“", "”", "…",
        "n't", "'s", "\\n", "\\u0000"};
    std::string s = "w";
    const std::size_t len = 1 + rng.below(20);
    for (std::size_t i = 0; i < len; ++i) s += pieces[rng.below(pieces.size())];
    return s;
}

}  // namespace

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("Good movie!"), (Tokens{"good", "movie", "!"}));
    EXPECT_EQ(tokenize(""), Tokens{});
    EXPECT_EQ(tokenize("I don't think it's BAD..."),
              (Tokens{"i", "do", "n't", "think", "it", "'s", "bad", ".", ".", "."}));
    EXPECT_EQ(tokenize("we'll see; you've got 2.5%"),
              (Tokens{"we", "'ll", "see", ";", "you", "'ve", "got", "2", ".", "5", "%"}));
    EXPECT_EQ(tokenize("o'clock 'quoted'"), (Tokens{"o", "'", "clock", "'", "quoted", "'"}));
    EXPECT_EQ(tokenize("Café naïve"), (Tokens{"café", "naïve"}));
    EXPECT_EQ(tokenize("  \t\n "), Tokens{});
}

TEST(Tokenize, IdempotentOnCleanText) {
    TempDir dir("tok");
    const auto paths = sentpool::testing::write_raw_dataset("TREC", dir.path());
    const Corpus trec = load_dataset("TREC", paths);
    const std::vector<std::string> extra = {"Isn't it odd?", "They'd've gone", "\"Quote\" (paren) [x]",
                                            "can't won't shan't", "rock'n'roll", "L'Oréal's price: $5"};
    for (std::size_t i = 0; i < trec.examples.size(); i += 37) {
        const auto& t = trec.examples[i].tokens;
        ASSERT_EQ(tokenize(join(t)), t);
    }
    for (const auto& s : extra) {
        const auto t = tokenize(s);
        EXPECT_EQ(tokenize(join(t)), t) << s;
    }
}

TEST(Sanitize, ReplacesInvalidBytes) {
    const auto [clean, n] = sanitize_utf8(std::string("ok \xff\xfe caf\xc3\xa9 \xe9t\xe9"));
    EXPECT_EQ(n, 4u);
    EXPECT_EQ(clean, "ok \xEF\xBF\xBD\xEF\xBF\xBD café \xEF\xBF\xBDt\xEF\xBF\xBD");
    EXPECT_EQ(sanitize_utf8("plain").second, 0u);
}

TEST(Split, Names) {
    for (Split s : {Split::train, Split::dev, Split::test, Split::unsplit}) EXPECT_EQ(parse_split(to_string(s)), s);
    EXPECT_FALSE(parse_split("validation"));
}

class DatasetAdapter : public ::testing::TestWithParam<const char*> {};

TEST_P(DatasetAdapter, CanonicalLayoutMatchesPublishedStatistics) {
    TempDir dir("raw");
    const std::string name = GetParam();
    const auto paths = sentpool::testing::write_raw_dataset(name, dir.path());
    const Corpus c = load_dataset(name, paths);
    const auto& info = dataset_info(name);
    EXPECT_EQ(c.examples.size(), info.size);
    EXPECT_EQ(c.classes, info.classes);
    EXPECT_EQ(c.has_standard_split, info.test_size.has_value());
    if (info.test_size) {
        EXPECT_EQ(c.count(Split::test), *info.test_size);
    }
}

TEST_P(DatasetAdapter, CountMismatchFailsLoudly) {
    TempDir dir("raw");
    const std::string name = GetParam();
    const auto paths = sentpool::testing::write_raw_dataset(name, dir.path(), 1);
    try {
        load_dataset(name, paths);
        FAIL() << "expected IntegrityError";
    } catch (const IntegrityError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("expected " + std::to_string(dataset_info(name).size)), std::string::npos) << msg;
    }
    EXPECT_NO_THROW(load_dataset(name, paths, false));
}

INSTANTIATE_TEST_SUITE_P(AllSix, DatasetAdapter, ::testing::Values("MR", "SST-1", "SST-2", "TREC", "Subj", "CR"),
                         [](const auto& info) {
                             std::string s = info.param;
                             s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
                             return s;
                         });

TEST(DatasetAdapter, PublishedFigures) {
    TempDir dir("raw");
    const Corpus trec = load_dataset("TREC", sentpool::testing::write_raw_dataset("TREC", dir.path()));
    EXPECT_EQ(trec.examples.size(), 5952u);
    EXPECT_EQ(trec.classes, 6u);
    EXPECT_EQ(trec.count(Split::test), 500u);
    const Corpus sst2 = load_dataset("SST-2", sentpool::testing::write_raw_dataset("SST-2", dir.path()));
    EXPECT_EQ(sst2.examples.size(), 9613u);
    EXPECT_EQ(sst2.count(Split::test), 1821u);
    EXPECT_EQ(sst2.classes, 2u);
    const Corpus mr = load_dataset("MR", sentpool::testing::write_raw_dataset("MR", dir.path()));
    EXPECT_EQ(mr.examples.size(), 10662u);
    EXPECT_FALSE(mr.has_standard_split);
}

TEST(DatasetAdapter, LabelAssignment) {
    TempDir dir("raw");
    std::ofstream(dir / "pos") << "great fun\n\n";
    std::ofstream(dir / "neg") << "dull\n";
    const Corpus mr = load_dataset("MR", {dir / "pos", dir / "neg"}, false);
    ASSERT_EQ(mr.examples.size(), 2u);
    EXPECT_EQ(mr.examples[0].label, 1u);
    EXPECT_EQ(mr.examples[1].label, 0u);

    std::ofstream(dir / "tr") << "NUM:date When was it ?\nHUM:ind Who wrote it ?\n";
    std::ofstream(dir / "te") << "LOC:city Where is it ?\n";
    const Corpus trec = load_dataset("TREC", {dir / "tr", dir / "te"}, false);
    EXPECT_EQ(trec.examples[0].label, 5u);
    EXPECT_EQ(trec.examples[0].tokens, (Tokens{"when", "was", "it", "?"}));
    EXPECT_EQ(trec.examples[2].split, Split::test);

    std::ofstream(dir / "a") << "0 awful\n2 meh\n4 superb\n";
    std::ofstream(dir / "b") << "1 bad\n";
    std::ofstream(dir / "c") << "3 good\n";
    const Corpus sst2 = load_dataset("SST-2", {dir / "a", dir / "b", dir / "c"}, false);
    ASSERT_EQ(sst2.examples.size(), 4u);
    EXPECT_EQ(sst2.examples[0].label, 0u);
    EXPECT_EQ(sst2.examples[1].label, 1u);
    EXPECT_EQ(sst2.examples[2].split, Split::dev);
    EXPECT_EQ(sst2.examples[3].label, 1u);
    const Corpus sst1 = load_dataset("SST-1", {dir / "a", dir / "b", dir / "c"}, false);
    EXPECT_EQ(sst1.examples[1].label, 2u);
}

TEST(DatasetAdapter, MalformedLinesArePositioned) {
    TempDir dir("raw");
    std::ofstream(dir / "tr") << "NUM:date fine\nno colon here\n";
    std::ofstream(dir / "te") << "LOC:city ok\n";
    try {
        load_dataset("TREC", {dir / "tr", dir / "te"}, false);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 2u);
    }
    EXPECT_THROW(load_dataset("TREC", {dir / "tr"}, false), InvalidConfig);
    EXPECT_THROW(load_dataset("MR", {dir / "missing", dir / "te"}, false), IoError);
    EXPECT_THROW(load_dataset("IMDB", {}, false), InvalidConfig);
}

TEST(DatasetAdapter, LegacyBytesReplacedAndCounted) {
    TempDir dir("raw");
    std::ofstream(dir / "pos", std::ios::binary) << "caf\xe9 au lait\n";
    std::ofstream(dir / "neg") << "plain\n";
    const Corpus c = load_dataset("Subj", {dir / "pos", dir / "neg"}, false);
    EXPECT_EQ(c.replaced_bytes, 1u);
    EXPECT_EQ(c.examples[0].text, "caf\xEF\xBF\xBD au lait");
}

TEST(Folds, MrSizedCorpus) {
    const Corpus mr = synthetic_cv_corpus(10662);
    const FoldPlan plan = make_folds(mr, 10, 3);
    const auto sizes = plan.fold_sizes();
    EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), 10662u);
    for (auto s : sizes) EXPECT_TRUE(s == 1066 || s == 1067) << s;
    EXPECT_EQ(std::count(sizes.begin(), sizes.end(), 1067u), 2);
}

TEST(Folds, DeterministicPartition) {
    const Corpus c = synthetic_cv_corpus(103);
    const FoldPlan a = make_folds(c, 10, 9), b = make_folds(c, 10, 9), other = make_folds(c, 10, 10);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_NE(a.assignments, other.assignments);
    std::set<std::size_t> all;
    for (std::size_t f = 0; f < 10; ++f) {
        const auto in = a.indices_in(f);
        for (auto i : in) EXPECT_TRUE(all.insert(i).second) << "index " << i << " in two folds";
        EXPECT_EQ(in.size() + a.indices_outside(f).size(), 103u);
    }
    EXPECT_EQ(all.size(), 103u);
}

TEST(Folds, InvalidRequests) {
    EXPECT_THROW(make_folds(synthetic_cv_corpus(5), 10, 0), InvalidConfig);
    EXPECT_THROW(make_folds(synthetic_cv_corpus(5), 1, 0), InvalidConfig);
    Corpus split = synthetic_cv_corpus(20);
    split.has_standard_split = true;
    EXPECT_THROW(make_folds(split, 10, 0), InvalidConfig);
}

TEST(DevSplit, HundredExamples) {
    const auto ex = synthetic_cv_corpus(100).examples;
    const auto [tr, dev] = dev_split(ex, 0.1, 4);
    EXPECT_EQ(tr.size(), 90u);
    EXPECT_EQ(dev.size(), 10u);
    std::set<std::string> seen;
    for (const auto& e : tr) {
        EXPECT_EQ(e.split, Split::train);
        seen.insert(e.text);
    }
    for (const auto& e : dev) {
        EXPECT_EQ(e.split, Split::dev);
        EXPECT_TRUE(seen.insert(e.text).second) << "overlap: " << e.text;
    }
    EXPECT_EQ(seen.size(), 100u);
}

TEST(DevSplit, TrecTrainingPortion) {
    TempDir dir("raw");
    const Corpus trec = load_dataset("TREC", sentpool::testing::write_raw_dataset("TREC", dir.path()));
    const auto train = trec.subset(Split::train);
    ASSERT_EQ(train.size(), 5452u);
    const auto [tr, dev] = dev_split(train, 0.1, 1);
    EXPECT_EQ(dev.size(), 545u);
    EXPECT_EQ(tr.size(), 4907u);
}

TEST(DevSplit, Errors) {
    const auto ex = synthetic_cv_corpus(3).examples;
    EXPECT_THROW(dev_split(ex, 0.1, 0), InvalidConfig);
    EXPECT_THROW(dev_split(ex, 0.0, 0), InvalidConfig);
    EXPECT_THROW(dev_split(ex, 1.0, 0), InvalidConfig);
}

TEST(Jsonl, RoundTripKeepsSplitTags) {
    TempDir dir("jsonl");
    const Corpus trec = load_dataset("TREC", sentpool::testing::write_raw_dataset("TREC", dir.path()));
    export_jsonl(trec, dir / "TREC.jsonl");
    const Corpus back = import_jsonl(dir / "TREC.jsonl", "TREC");
    EXPECT_EQ(back, trec);

    const Corpus mr = synthetic_cv_corpus(40);
    export_jsonl(mr, dir / "toy.jsonl");
    EXPECT_EQ(import_jsonl(dir / "toy.jsonl", "toy"), mr);
}

TEST(Jsonl, MissingLabelReportsLine) {
    TempDir dir("jsonl");
    std::ofstream(dir / "bad.jsonl") << R"({"text":"ok","label":1})" << "\n"
                                     << R"({"text":"no label"})" << "\n";
    try {
        import_jsonl(dir / "bad.jsonl", "toy");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.unit(), ParseError::Unit::line);
        EXPECT_EQ(e.position(), 2u);
    }
    std::ofstream(dir / "bad2.jsonl") << "{not json\n";
    EXPECT_THROW(import_jsonl(dir / "bad2.jsonl", "toy"), ParseError);
    std::ofstream(dir / "bad3.jsonl") << R"({"text":"x","label":7})" << "\n";
    EXPECT_THROW(import_jsonl(dir / "bad3.jsonl", "MR"), ParseError);
}

TEST(Jsonl, Utf8AndQuotesFuzzRoundTrip) {
    TempDir dir("jsonl");
    Rng rng(77);
    for (int round = 0; round < 20; ++round) {
        Corpus c;
        c.name = "fuzz";
        c.classes = 3;
        c.has_standard_split = true;
        for (int i = 0; i < 50; ++i) {
            c.examples.push_back(make_example(random_utf8_text(rng), rng.below(3),
                                              static_cast<Split>(rng.below(3))));
        }
        c.examples.push_back(make_example("top", 2, Split::test));
        export_jsonl(c, dir / "f.jsonl");
        ASSERT_EQ(import_jsonl(dir / "f.jsonl", "fuzz"), c) << "round " << round;
    }
}
