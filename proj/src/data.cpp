#include "sentpool/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sentpool/errors.hpp"
#include "sentpool/numkit.hpp"

namespace sentpool {

using json = nlohmann::json;

std::string_view to_string(Split split) noexcept {
    switch (split) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
        case Split::unsplit: return "unsplit";
    }
    return "unsplit";
}

std::optional<Split> parse_split(std::string_view s) noexcept {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    if (s == "unsplit") return Split::unsplit;
    return std::nullopt;
}

Example make_example(std::string text, std::size_t label, Split split) {
    Example e;
    e.tokens = tokenize(text);
    e.text = std::move(text);
    e.label = label;
    e.split = split;
    return e;
}

std::size_t Corpus::count(Split split) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(examples.begin(), examples.end(), [&](const Example& e) { return e.split == split; }));
}

std::vector<Example> Corpus::subset(Split split) const {
    std::vector<Example> out;
    for (const auto& e : examples) {
        if (e.split == split) out.push_back(e);
    }
    return out;
}

const std::vector<DatasetInfo>& known_datasets() {
    static const std::vector<DatasetInfo> infos = {
        {"MR", 2, 10662, std::nullopt, {"negative", "positive"}, {"positive", "negative"}},
        {"SST-1", 5, 11855, 2210,
         {"very negative", "negative", "neutral", "positive", "very positive"},
         {"train", "dev", "test"}},
        {"SST-2", 2, 9613, 1821, {"negative", "positive"}, {"train", "dev", "test"}},
        {"TREC", 6, 5952, 500, {"ABBR", "DESC", "ENTY", "HUM", "LOC", "NUM"}, {"train", "test"}},
        {"Subj", 2, 10000, std::nullopt, {"objective", "subjective"}, {"subjective", "objective"}},
        {"CR", 2, 3775, std::nullopt, {"negative", "positive"}, {"positive", "negative"}},
    };
    return infos;
}

const DatasetInfo& dataset_info(std::string_view name) {
    for (const auto& info : known_datasets()) {
        if (info.name == name) return info;
    }
    throw InvalidConfig("unknown dataset '" + std::string(name) + "' (expected MR, SST-1, SST-2, TREC, Subj or CR)");
}

namespace {

struct RawLine {
    std::size_t number;
    std::string text;
};

std::vector<RawLine> read_lines(const std::filesystem::path& path, std::size_t& replaced) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<RawLine> lines;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto [clean, n] = sanitize_utf8(line);
        replaced += n;
        if (clean.find_first_not_of(" \t") == std::string::npos) continue;
        lines.push_back({number, std::move(clean)});
    }
    return lines;
}

void add_example(Corpus& corpus, std::string text, std::size_t label, Split split) {
    Example e = make_example(std::move(text), label, split);
    if (e.tokens.empty()) {
        ++corpus.rejected_empty;
        return;
    }
    corpus.examples.push_back(std::move(e));
}

[[noreturn]] void bad_line(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    throw ParseError(ParseError::Unit::line, line, path.string() + ":" + std::to_string(line) + ": " + what);
}

void load_labelled_files(Corpus& corpus, const std::vector<std::filesystem::path>& sources,
                         const std::vector<std::size_t>& labels) {
    for (std::size_t s = 0; s < sources.size(); ++s) {
        for (auto& line : read_lines(sources[s], corpus.replaced_bytes)) {
            add_example(corpus, std::move(line.text), labels[s], Split::unsplit);
        }
    }
}

void load_sst(Corpus& corpus, const std::vector<std::filesystem::path>& sources, bool binary) {
    const Split splits[] = {Split::train, Split::dev, Split::test};
    for (std::size_t s = 0; s < sources.size(); ++s) {
        for (auto& line : read_lines(sources[s], corpus.replaced_bytes)) {
            const auto& t = line.text;
            const std::size_t sp = t.find_first_of(" \t");
            if (sp != 1 || t[0] < '0' || t[0] > '4') bad_line(sources[s], line.number, "expected '<0-4> <sentence>'");
            const std::size_t fine = static_cast<std::size_t>(t[0] - '0');
            std::string sentence = t.substr(sp + 1);
            if (!binary) {
                add_example(corpus, std::move(sentence), fine, splits[s]);
            } else if (fine != 2) {
                add_example(corpus, std::move(sentence), fine < 2 ? 0 : 1, splits[s]);
            }
        }
    }
}

void load_trec(Corpus& corpus, const std::vector<std::filesystem::path>& sources, const DatasetInfo& info) {
    const Split splits[] = {Split::train, Split::test};
    for (std::size_t s = 0; s < sources.size(); ++s) {
        for (auto& line : read_lines(sources[s], corpus.replaced_bytes)) {
            const auto& t = line.text;
            const std::size_t colon = t.find(':');
            const std::size_t sp = t.find(' ');
            if (colon == std::string::npos || sp == std::string::npos || colon > sp) {
                bad_line(sources[s], line.number, "expected 'COARSE:fine question'");
            }
            const std::string_view coarse = std::string_view(t).substr(0, colon);
            const auto it = std::find(info.label_names.begin(), info.label_names.end(), coarse);
            if (it == info.label_names.end()) {
                bad_line(sources[s], line.number, "unknown coarse label '" + std::string(coarse) + "'");
            }
            add_example(corpus, t.substr(sp + 1), static_cast<std::size_t>(it - info.label_names.begin()),
                        splits[s]);
        }
    }
}

}  // namespace

Corpus load_dataset(std::string_view name, const std::vector<std::filesystem::path>& sources, bool integrity) {
    const DatasetInfo& info = dataset_info(name);
    if (sources.size() != info.source_roles.size()) {
        std::string roles;
        for (auto r : info.source_roles) roles += (roles.empty() ? "" : ", ") + std::string(r);
        throw InvalidConfig(std::string(name) + " expects " + std::to_string(info.source_roles.size()) +
                            " source files (" + roles + "), got " + std::to_string(sources.size()));
    }
    Corpus corpus;
    corpus.name = std::string(info.name);
    corpus.classes = info.classes;
    corpus.has_standard_split = info.test_size.has_value();

    if (name == "MR" || name == "CR") {
        load_labelled_files(corpus, sources, {1, 0});
    } else if (name == "Subj") {
        load_labelled_files(corpus, sources, {1, 0});
    } else if (name == "SST-1" || name == "SST-2") {
        load_sst(corpus, sources, name == "SST-2");
    } else if (name == "TREC") {
        load_trec(corpus, sources, info);
    }
    if (integrity) check_integrity(corpus);
    return corpus;
}

void check_integrity(const Corpus& corpus) {
    const DatasetInfo& info = dataset_info(corpus.name);
    std::vector<std::string> problems;
    auto expect = [&](const std::string& what, std::size_t want, std::size_t got) {
        if (want != got) {
            problems.push_back(what + ": expected " + std::to_string(want) + ", found " + std::to_string(got));
        }
    };
    expect("examples", info.size, corpus.examples.size());
    std::set<std::size_t> labels;
    for (const auto& e : corpus.examples) labels.insert(e.label);
    expect("classes", info.classes, labels.size());
    if (!labels.empty() && *labels.rbegin() >= info.classes) {
        problems.push_back("label " + std::to_string(*labels.rbegin()) + " out of range");
    }
    if (info.test_size) expect("test examples", *info.test_size, corpus.count(Split::test));
    if (!problems.empty()) {
        std::string msg = corpus.name + " does not match its published statistics:";
        for (const auto& p : problems) msg += "\n  " + p;
        if (corpus.rejected_empty > 0) {
            msg += "\n  (" + std::to_string(corpus.rejected_empty) + " sentences rejected as empty)";
        }
        throw IntegrityError(msg);
    }
}

// --- folds and dev split -------------------------------------------------------

std::vector<std::size_t> FoldPlan::fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto f : assignments) ++sizes[f];
    return sizes;
}

std::vector<std::size_t> FoldPlan::indices_in(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::indices_outside(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] != fold) out.push_back(i);
    }
    return out;
}

FoldPlan make_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
    if (corpus.has_standard_split) {
        throw InvalidConfig("make_folds: " + corpus.name + " has a standard split; cross-validation does not apply");
    }
    const std::size_t n = corpus.examples.size();
    if (k < 2 || k > n) {
        throw InvalidConfig("make_folds: k = " + std::to_string(k) + " is invalid for " + std::to_string(n) +
                            " examples");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.resize(n);
    for (std::size_t p = 0; p < n; ++p) plan.assignments[order[p]] = p % k;
    return plan;
}

std::pair<std::vector<Example>, std::vector<Example>> dev_split(const std::vector<Example>& train, double fraction,
                                                                std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidConfig("dev_split: fraction must lie in (0, 1)");
    const std::size_t n = train.size();
    const auto dev_n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (dev_n == 0 || dev_n >= n) {
        throw InvalidConfig("dev_split: " + std::to_string(n) + " examples at fraction " + std::to_string(fraction) +
                            " leave an empty train or dev set");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<bool> is_dev(n, false);
    for (std::size_t p = 0; p < dev_n; ++p) is_dev[order[p]] = true;

    std::pair<std::vector<Example>, std::vector<Example>> out;
    out.first.reserve(n - dev_n);
    out.second.reserve(dev_n);
    for (std::size_t i = 0; i < n; ++i) {
        Example e = train[i];
        e.split = is_dev[i] ? Split::dev : Split::train;
        (is_dev[i] ? out.second : out.first).push_back(std::move(e));
    }
    return out;
}

// --- JSONL ------------------------------------------------------------------------

void export_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& e : corpus.examples) {
        json record = {{"text", e.text}, {"label", e.label}};
        if (e.split != Split::unsplit) record["split"] = std::string(to_string(e.split));
        out << record.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Corpus import_jsonl(const std::filesystem::path& path, std::string_view name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    Corpus corpus;
    corpus.name = std::string(name);
    std::optional<std::size_t> known_classes;
    for (const auto& info : known_datasets()) {
        if (info.name == name) known_classes = info.classes;
    }

    auto fail = [&](std::size_t line, const std::string& what) -> void {
        throw ParseError(ParseError::Unit::line, line, path.string() + ":" + std::to_string(line) + ": " + what);
    };

    std::string line;
    std::size_t line_no = 0;
    std::size_t max_label = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!record.is_object()) fail(line_no, "record is not an object");
        if (!record.contains("text") || !record["text"].is_string()) fail(line_no, "missing string field \"text\"");
        if (!record.contains("label") || !record["label"].is_number_integer() ||
            record["label"].get<std::int64_t>() < 0) {
            fail(line_no, "missing non-negative integer field \"label\"");
        }
        Split split = Split::unsplit;
        if (record.contains("split")) {
            const auto& s = record["split"];
            std::optional<Split> parsed;
            if (s.is_string()) parsed = parse_split(s.get<std::string>());
            if (!parsed) fail(line_no, "field \"split\" must be one of train, dev, test, unsplit");
            split = *parsed;
        }
        const auto label = record["label"].get<std::size_t>();
        if (known_classes && label >= *known_classes) {
            fail(line_no, "label " + std::to_string(label) + " out of range for " + corpus.name);
        }
        max_label = std::max(max_label, label);
        Example e = make_example(record["text"].get<std::string>(), label, split);
        if (e.tokens.empty()) {
            ++corpus.rejected_empty;
            continue;
        }
        if (split != Split::unsplit) corpus.has_standard_split = true;
        corpus.examples.push_back(std::move(e));
    }
    corpus.classes = known_classes.value_or(std::max<std::size_t>(2, max_label + 1));
    return corpus;
}

}  // namespace sentpool
