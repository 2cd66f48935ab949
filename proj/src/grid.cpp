#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "sentpool/errors.hpp"
#include "sentpool/experiments.hpp"

namespace sentpool {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kIndexFile = "grid_index.json";
constexpr const char* kResultFile = "result.json";

std::string_view to_string(CellStatus s) {
    switch (s) {
        case CellStatus::pending: return "pending";
        case CellStatus::complete: return "complete";
        case CellStatus::failed: return "failed";
    }
    return "pending";
}

CellStatus parse_status(std::string_view s) {
    if (s == "complete") return CellStatus::complete;
    if (s == "failed") return CellStatus::failed;
    return CellStatus::pending;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("corrupt JSON in '" + path.string() + "': " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out << j.dump(2) << '\n';
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

std::string run_stem(std::uint64_t seed, std::optional<std::size_t> fold) {
    std::string stem = "run_seed" + std::to_string(seed);
    if (fold) stem += "_fold" + std::to_string(*fold);
    return stem;
}

json cell_to_json(const CellKey& key, const CellResult& cell) {
    json runs = json::array();
    for (const auto& r : cell.runs) {
        runs.push_back({{"seed", r.seed},
                        {"fold", r.fold ? json(*r.fold) : json(nullptr)},
                        {"accuracy", r.accuracy},
                        {"epoch_selected", r.epoch_selected},
                        {"metadata", r.metadata.string()}});
    }
    return {{"body", std::string(to_string(key.body))},
            {"head", std::string(to_string(key.head))},
            {"dataset", key.dataset},
            {"status", std::string(to_string(cell.status))},
            {"accuracy", cell.accuracy},
            {"seed_accuracies", cell.seed_accuracies},
            {"runs", runs},
            {"error", cell.error}};
}

CellResult cell_from_json(const json& j) {
    CellResult cell;
    cell.status = parse_status(j.value("status", "pending"));
    cell.accuracy = j.value("accuracy", 0.0);
    cell.seed_accuracies = j.value("seed_accuracies", std::vector<double>{});
    cell.error = j.value("error", "");
    for (const auto& r : j.value("runs", json::array())) {
        RunRecord rec;
        rec.seed = r.at("seed").get<std::uint64_t>();
        if (!r.at("fold").is_null()) rec.fold = r.at("fold").get<std::size_t>();
        rec.accuracy = r.at("accuracy").get<double>();
        rec.epoch_selected = r.value("epoch_selected", std::size_t{0});
        rec.metadata = r.at("metadata").get<std::string>();
        cell.runs.push_back(std::move(rec));
    }
    return cell;
}

// A stored cell is reusable only if it was computed for exactly these seeds
// (in order) and, for cross-validated corpora, this fold count.
bool covers(const CellResult& cell, const std::vector<std::uint64_t>& seeds, std::size_t folds) {
    if (cell.status != CellStatus::complete || cell.seed_accuracies.size() != seeds.size()) return false;
    std::vector<std::uint64_t> seen;
    for (const auto& r : cell.runs) {
        if (seen.empty() || seen.back() != r.seed) seen.push_back(r.seed);
        if (r.fold && *r.fold >= folds) return false;
    }
    if (seen != seeds) return false;
    const bool cv = !cell.runs.empty() && cell.runs.front().fold.has_value();
    return cell.runs.size() == seeds.size() * (cv ? folds : 1);
}

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

json eval_to_json(const EvalResult& r) {
    return {{"accuracy", r.accuracy},
            {"n_correct", r.n_correct},
            {"n_total", r.n_total},
            {"per_class_total", r.per_class_total},
            {"per_class_correct", r.per_class_correct}};
}

std::string_view format_name(EmbeddingFormat f) {
    switch (f) {
        case EmbeddingFormat::binary: return "binary";
        case EmbeddingFormat::text: return "text";
        case EmbeddingFormat::random: return "random";
    }
    return "binary";
}

class GridRunner {
public:
    GridRunner(const ExperimentSpec& spec, const GridOptions& options, const std::map<std::string, Corpus>& corpora,
               const EmbeddingTable& embeddings)
        : spec_(spec), options_(options), corpora_(corpora), embeddings_(embeddings) {}

    void log(const std::string& line) {
        if (!options_.log) return;
        std::lock_guard lock(log_mutex_);
        options_.log(line);
    }

    CellResult run_cell(const CellKey& key) {
        const fs::path dir = spec_.output_dir / "cells" / key.id();
        fs::create_directories(dir);
        const Corpus& corpus = corpora_.at(key.dataset);

        CellResult cell;
        try {
            for (std::uint64_t seed : spec_.seeds) {
                std::vector<double> accs;
                if (corpus.has_standard_split) {
                    std::vector<Example> train_set = corpus.subset(Split::train);
                    std::vector<Example> dev_set = corpus.subset(Split::dev);
                    const bool carved = dev_set.empty();
                    if (carved) std::tie(train_set, dev_set) = dev_split(train_set, spec_.dev_fraction, seed);
                    const auto rec = run_one(key, dir, seed, std::nullopt, train_set, dev_set,
                                             corpus.subset(Split::test), carved);
                    accs.push_back(rec.accuracy);
                    cell.runs.push_back(rec);
                } else {
                    const FoldPlan plan = make_folds(corpus, spec_.folds, seed);
                    for (std::size_t f = 0; f < plan.k; ++f) {
                        std::vector<Example> test_set;
                        for (auto i : plan.indices_in(f)) test_set.push_back(corpus.examples[i]);
                        std::vector<Example> rest;
                        for (auto i : plan.indices_outside(f)) rest.push_back(corpus.examples[i]);
                        auto [train_set, dev_set] = dev_split(rest, spec_.dev_fraction, derive_seed(seed, f + 1));
                        const auto rec = run_one(key, dir, seed, f, train_set, dev_set, test_set, true);
                        accs.push_back(rec.accuracy);
                        cell.runs.push_back(rec);
                    }
                }
                cell.seed_accuracies.push_back(mean(accs));
            }
            cell.accuracy = mean(cell.seed_accuracies);
            cell.status = CellStatus::complete;
        } catch (const std::exception& e) {
            cell.status = CellStatus::failed;
            cell.error = e.what();
            log("[" + key.id() + "] FAILED: " + e.what());
        }
        write_json(dir / kResultFile, cell_to_json(key, cell));
        return cell;
    }

    std::atomic<std::size_t> trained{0};
    std::atomic<std::size_t> reused{0};

private:
    RunRecord run_one(const CellKey& key, const fs::path& dir, std::uint64_t seed, std::optional<std::size_t> fold,
                      const std::vector<Example>& train_set, const std::vector<Example>& dev_set,
                      const std::vector<Example>& test_set, bool dev_carved) {
        const std::string stem = run_stem(seed, fold);
        const fs::path meta_path = dir / (stem + ".json");
        RunRecord rec;
        rec.seed = seed;
        rec.fold = fold;
        rec.metadata = stem + ".json";

        if (options_.resume && fs::exists(meta_path)) {
            const json meta = read_json(meta_path);
            if (meta.value("status", "") == "complete") {
                rec.accuracy = meta.at("test").at("accuracy").get<double>();
                rec.epoch_selected = meta.at("epoch_selected").get<std::size_t>();
                ++reused;
                return rec;
            }
        }

        ModelConfig cfg = spec_.model;
        cfg.body = key.body;
        cfg.head = key.head;
        cfg.hidden_dim = key.body == Body::lstm ? spec_.lstm_hidden : spec_.blstm_hidden;
        cfg.seed = seed;

        const std::string tag = "[" + key.id() + " " + stem + "]";
        const auto start = std::chrono::steady_clock::now();
        Model model = build_model(cfg, corpora_.at(key.dataset).classes);
        const ParamReport params = param_report(model);
        TrainedModel trained_model =
            train(std::move(model), train_set, dev_set, embeddings_, [&](const EpochStats& s) {
                std::ostringstream os;
                os.precision(4);
                os << tag << " epoch " << s.epoch << " loss " << s.mean_train_loss << " dev "
                   << s.dev_accuracy << (s.improved ? " *" : "");
                log(os.str());
            });
        const EvalResult test = evaluate(trained_model.model, test_set, embeddings_);
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        json meta;
        meta["status"] = "complete";
        meta["version"] = std::string(kVersion);
        meta["cell"] = key.id();
        meta["dataset"] = key.dataset;
        meta["seed"] = seed;
        meta["fold"] = fold ? json(*fold) : json(nullptr);
        meta["config"] = json::parse(model_config_to_json(trained_model.model.config()));
        meta["tokenizer"] = std::string(kTokenizerVersion);
        meta["protocol"] = {{"kind", fold ? "cross_validation" : "standard_split"},
                            {"folds", fold ? json(spec_.folds) : json(nullptr)},
                            {"dev_fraction", spec_.dev_fraction},
                            {"dev_source", dev_carved ? "dev_split" : "standard"},
                            {"cv_aggregation", "fold-mean"},
                            {"model_selection", "dev-accuracy"}};
        meta["embeddings"] = {{"path", spec_.embeddings.string()},
                              {"format", std::string(format_name(spec_.embeddings_format))},
                              {"dim", embeddings_.dim()},
                              {"vocab_loaded", embeddings_.vocab_size()},
                              {"oov_range", spec_.oov.range},
                              {"oov_seed", spec_.oov.seed}};
        meta["sizes"] = {{"train", train_set.size()}, {"dev", dev_set.size()}, {"test", test_set.size()}};
        meta["params"] = {{"recurrent", params.recurrent}, {"classifier", params.classifier}, {"total", params.total}};
        meta["epoch_selected"] = trained_model.epoch_selected;
        meta["dev_accuracy_history"] = trained_model.dev_accuracy_history;
        meta["train_loss_history"] = trained_model.train_loss_history;
        meta["test"] = eval_to_json(test);
        meta["elapsed_seconds"] = elapsed;
        if (spec_.save_checkpoints) {
            const std::string ckpt = stem + ".ckpt";
            trained_model.model.save(dir / ckpt, json{{"cell", key.id()}, {"seed", seed}}.dump());
            meta["checkpoint"] = ckpt;
        } else {
            meta["checkpoint"] = nullptr;
        }
        write_json(meta_path, meta);

        log(tag + " test accuracy " + format_percent(test.accuracy) + " (epoch " +
            std::to_string(trained_model.epoch_selected) + ")");
        rec.accuracy = test.accuracy;
        rec.epoch_selected = trained_model.epoch_selected;
        ++trained;
        return rec;
    }

    const ExperimentSpec& spec_;
    const GridOptions& options_;
    const std::map<std::string, Corpus>& corpora_;
    const EmbeddingTable& embeddings_;
    std::mutex log_mutex_;
};

json index_json(const ExperimentSpec& spec, const ResultsGrid& grid) {
    json cells = json::object();
    for (const auto& [key, cell] : grid.cells) {
        cells[key.id()] = {{"body", std::string(to_string(key.body))},
                           {"head", std::string(to_string(key.head))},
                           {"dataset", key.dataset},
                           {"status", std::string(to_string(cell.status))}};
    }
    json bodies = json::array();
    for (Body b : grid.bodies) bodies.push_back(std::string(to_string(b)));
    json heads = json::array();
    for (HeadKind h : grid.heads) heads.push_back(std::string(to_string(h)));
    return {{"version", std::string(kVersion)},
            {"datasets", grid.datasets},
            {"bodies", bodies},
            {"heads", heads},
            {"seeds", spec.seeds},
            {"config", dump_experiment_config(spec)},
            {"cells", cells}};
}

}  // namespace

// --- ResultsGrid ------------------------------------------------------------------

std::string CellKey::id() const {
    return std::string(to_string(body)) + "_" + std::string(to_string(head)) + "_" + dataset;
}

std::vector<CellKey> ResultsGrid::keys() const {
    std::vector<CellKey> out;
    for (Body b : bodies) {
        for (HeadKind h : heads) {
            for (const auto& d : datasets) out.push_back({b, h, d});
        }
    }
    return out;
}

const CellResult* ResultsGrid::find(const CellKey& key) const {
    const auto it = cells.find(key);
    return it == cells.end() ? nullptr : &it->second;
}

void ResultsGrid::set_accuracy(Body body, HeadKind head, const std::string& dataset, double accuracy) {
    if (std::find(bodies.begin(), bodies.end(), body) == bodies.end()) bodies.push_back(body);
    if (std::find(heads.begin(), heads.end(), head) == heads.end()) heads.push_back(head);
    if (std::find(datasets.begin(), datasets.end(), dataset) == datasets.end()) datasets.push_back(dataset);
    CellResult& cell = cells[{body, head, dataset}];
    cell.status = CellStatus::complete;
    cell.accuracy = accuracy;
    cell.seed_accuracies = {accuracy};
}

std::vector<CellKey> ResultsGrid::incomplete() const {
    std::vector<CellKey> out;
    for (const auto& key : keys()) {
        const CellResult* cell = find(key);
        if (cell == nullptr || cell->status != CellStatus::complete) out.push_back(key);
    }
    return out;
}

std::size_t ResultsGrid::failed_count() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& kv) {
        return kv.second.status == CellStatus::failed;
    }));
}

// --- running ----------------------------------------------------------------------

fs::path corpus_path(const ExperimentSpec& spec, std::string_view dataset) {
    return spec.data_dir / (std::string(dataset) + ".jsonl");
}

EmbeddingTable load_embeddings(const ExperimentSpec& spec, const std::unordered_set<std::string>& vocabulary) {
    LoadOptions opts;
    opts.expected_dim = spec.model.input_dim;
    opts.oov = spec.oov;
    opts.keep = &vocabulary;
    switch (spec.embeddings_format) {
        case EmbeddingFormat::binary: return load_word2vec_binary(spec.embeddings, opts);
        case EmbeddingFormat::text: return load_word2vec_text(spec.embeddings, opts);
        case EmbeddingFormat::random: break;
    }
    return EmbeddingTable({}, Matrix(0, spec.model.input_dim), spec.oov);
}

GridSummary run_grid(const ExperimentSpec& spec_in, const GridOptions& options) {
    ExperimentSpec spec = spec_in;
    if (options.workers != 0) spec.workers = options.workers;
    spec.validate();

    const fs::path index_path = spec.output_dir / kIndexFile;
    if (fs::exists(index_path) && !options.resume) {
        throw InvalidConfig("'" + spec.output_dir.string() +
                            "' already holds a grid; pass --resume to continue it or choose another output_dir");
    }

    for (const auto& name : spec.datasets) {
        const fs::path path = corpus_path(spec, name);
        if (fs::exists(path)) continue;
        std::string hint = "sentpool prepare " + name + " --in";
        bool known = false;
        for (const auto& info : known_datasets()) {
            if (info.name != name) continue;
            known = true;
            for (auto role : info.source_roles) hint += " <" + std::string(role) + ">";
        }
        if (!known) hint += " <raw files>";
        throw MissingInput("missing prepared corpus '" + path.string() + "'; create it with: " + hint + " --out " +
                           path.string());
    }
    if (spec.embeddings_format != EmbeddingFormat::random && !fs::exists(spec.embeddings)) {
        throw MissingInput("missing embeddings file '" + spec.embeddings.string() +
                           "'; point 'embeddings' at a word2vec file or set embeddings_format = random");
    }

    std::map<std::string, Corpus> corpora;
    std::unordered_set<std::string> vocabulary;
    for (const auto& name : spec.datasets) {
        Corpus c = import_jsonl(corpus_path(spec, name), name);
        if (c.examples.empty()) throw IntegrityError("corpus '" + name + "' is empty");
        for (const auto& e : c.examples) vocabulary.insert(e.tokens.begin(), e.tokens.end());
        corpora.emplace(name, std::move(c));
    }
    const EmbeddingTable embeddings = load_embeddings(spec, vocabulary);
    if (embeddings.dim() != spec.model.input_dim) {
        throw DimensionError("embeddings have dimension " + std::to_string(embeddings.dim()) + ", input_dim is " +
                             std::to_string(spec.model.input_dim));
    }

    ResultsGrid grid;
    grid.datasets = spec.datasets;
    grid.bodies = spec.bodies;
    grid.heads = spec.heads;
    std::vector<CellKey> todo;
    for (const auto& key : grid.keys()) {
        CellResult cell;
        const fs::path result = spec.output_dir / "cells" / key.id() / kResultFile;
        if (options.resume && fs::exists(result)) cell = cell_from_json(read_json(result));
        if (!covers(cell, spec.seeds, spec.folds)) todo.push_back(key);
        grid.cells[key] = std::move(cell);
    }

    fs::create_directories(spec.output_dir / "cells");
    std::mutex index_mutex;
    write_json(index_path, index_json(spec, grid));

    GridRunner runner(spec, options, corpora, embeddings);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) return;
            CellResult cell = runner.run_cell(todo[i]);
            std::lock_guard lock(index_mutex);
            grid.cells[todo[i]] = std::move(cell);
            write_json(index_path, index_json(spec, grid));
        }
    };
    const std::size_t n_workers = std::min(spec.workers, std::max<std::size_t>(todo.size(), 1));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Cells skipped above were complete; pull in their run counts for the summary.
    std::size_t reused_cells_runs = 0;
    for (const auto& [key, cell] : grid.cells) {
        if (std::find(todo.begin(), todo.end(), key) == todo.end()) reused_cells_runs += cell.runs.size();
    }
    return GridSummary{std::move(grid), runner.trained.load(), runner.reused.load() + reused_cells_runs};
}

ResultsGrid load_grid(const fs::path& output_dir) {
    const fs::path index_path = output_dir / kIndexFile;
    if (!fs::exists(index_path)) throw MissingInput("no grid index at '" + index_path.string() + "'");
    const json index = read_json(index_path);
    ResultsGrid grid;
    grid.datasets = index.at("datasets").get<std::vector<std::string>>();
    for (const auto& b : index.at("bodies")) grid.bodies.push_back(parse_body(b.get<std::string>()));
    for (const auto& h : index.at("heads")) grid.heads.push_back(parse_head(h.get<std::string>()));
    for (const auto& key : grid.keys()) {
        const fs::path result = output_dir / "cells" / key.id() / kResultFile;
        grid.cells[key] = fs::exists(result) ? cell_from_json(read_json(result)) : CellResult{};
    }
    return grid;
}

}  // namespace sentpool
