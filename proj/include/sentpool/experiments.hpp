#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sentpool/data.hpp"
#include "sentpool/embeddings.hpp"
#include "sentpool/heads.hpp"
#include "sentpool/trainer.hpp"

namespace sentpool {

inline constexpr std::string_view kVersion = "0.1.0";

enum class EmbeddingFormat { binary, text, random };

// Everything a grid run depends on. Parsed from a "key = value" text file;
// `dump_experiment_config` prints every key with its current value.
struct ExperimentSpec {
    std::vector<std::string> datasets = {"MR", "SST-1", "SST-2", "TREC", "Subj", "CR"};
    std::vector<Body> bodies = {Body::lstm, Body::blstm};
    std::vector<HeadKind> heads = {std::begin(kAllHeads), std::end(kAllHeads)};
    std::vector<std::uint64_t> seeds = {1};

    // body, head, hidden_dim and seed are filled per run.
    ModelConfig model;
    std::size_t lstm_hidden = kLstmHidden;
    std::size_t blstm_hidden = kBlstmHidden;
    std::size_t folds = kFolds;
    double dev_fraction = kDevFraction;

    std::filesystem::path data_dir = "data";  // holds <dataset>.jsonl
    std::filesystem::path embeddings;
    EmbeddingFormat embeddings_format = EmbeddingFormat::binary;
    OovPolicy oov;

    std::filesystem::path output_dir = "runs";
    bool save_checkpoints = true;
    std::size_t workers = 1;

    // Throws InvalidConfig.
    void validate() const;
};

// Throws InvalidConfig naming the offending line.
ExperimentSpec parse_experiment_config(std::string_view text);
ExperimentSpec load_experiment_config(const std::filesystem::path& path);
std::string dump_experiment_config(const ExperimentSpec& spec);

struct CellKey {
    Body body = Body::lstm;
    HeadKind head = HeadKind::tail;
    std::string dataset;

    // "lstm_max_pool_TREC"
    std::string id() const;
    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

enum class CellStatus { pending, complete, failed };

struct RunRecord {
    std::uint64_t seed = 0;
    std::optional<std::size_t> fold;
    double accuracy = 0.0;
    std::size_t epoch_selected = 0;
    std::filesystem::path metadata;  // relative to the cell directory
};

struct CellResult {
    CellStatus status = CellStatus::pending;
    // Mean over seeds of (fold-mean accuracy for CV datasets, test accuracy
    // otherwise).
    double accuracy = 0.0;
    std::vector<double> seed_accuracies;
    std::vector<RunRecord> runs;
    std::string error;
};

struct ResultsGrid {
    std::vector<std::string> datasets;
    std::vector<Body> bodies;
    std::vector<HeadKind> heads;
    std::map<CellKey, CellResult> cells;

    std::vector<CellKey> keys() const;
    const CellResult* find(const CellKey& key) const;
    // Marks the cell complete with a single accuracy value.
    void set_accuracy(Body body, HeadKind head, const std::string& dataset, double accuracy);
    std::vector<CellKey> incomplete() const;
    std::size_t failed_count() const;
};

struct GridOptions {
    bool resume = false;
    // Overrides spec.workers when non-zero.
    std::size_t workers = 0;
    std::function<void(const std::string&)> log;
};

struct GridSummary {
    ResultsGrid grid;
    std::size_t runs_trained = 0;
    std::size_t runs_reused = 0;
};

std::filesystem::path corpus_path(const ExperimentSpec& spec, std::string_view dataset);

// Loads the pretrained vectors (restricted to `vocabulary`) or, for
// EmbeddingFormat::random, an empty table where every token is OOV.
EmbeddingTable load_embeddings(const ExperimentSpec& spec, const std::unordered_set<std::string>& vocabulary);

// Train and evaluate every selected cell, persisting per-run metadata,
// checkpoints and a grid index under spec.output_dir. Completed runs found on
// disk are reused when options.resume is set; without it an existing grid
// directory is refused. A diverged cell is recorded as failed and the grid
// continues.
GridSummary run_grid(const ExperimentSpec& spec, const GridOptions& options = {});

// Reads what run_grid persisted.
ResultsGrid load_grid(const std::filesystem::path& output_dir);

enum class TableFormat { markdown, csv };

// "91.8%" for 0.9176.
std::string format_percent(double accuracy);
// "+2.30%" for (best - baseline) / baseline = 0.02304.
std::string format_improvement(double baseline, double best);

// One table per body; rows <BODY>_<Head>, columns datasets.
std::string render_results_tables(const ResultsGrid& grid, TableFormat format);
// MeanPool baseline, best of the five heads, relative improvement.
std::string render_improvement_table(const ResultsGrid& grid, Body body, TableFormat format);
// "B" when BLSTM beats LSTM for a (head, dataset), "L" for the reverse, "=" on ties.
std::string render_winner_table(const ResultsGrid& grid, TableFormat format);

// Same comparison, exposed for callers that need the letters themselves.
char winner_letter(double lstm_accuracy, double blstm_accuracy) noexcept;

}  // namespace sentpool
