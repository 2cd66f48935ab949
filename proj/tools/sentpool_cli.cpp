// sentpool: prepare corpora, train single cells or whole grids, and render
// the comparison tables.
//
// Exit codes: 0 success, 1 usage error, 2 data-integrity error,
// 3 diverged or failed cells present.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "sentpool/data.hpp"
#include "sentpool/errors.hpp"
#include "sentpool/experiments.hpp"

namespace fs = std::filesystem;
using namespace sentpool;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitFailedCells = 3;

void log_line(const std::string& line) { std::cerr << line << std::endl; }

int cmd_prepare(const std::string& dataset, const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<fs::path> sources(inputs.begin(), inputs.end());
    const Corpus corpus = load_dataset(dataset, sources, true);
    if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
    export_jsonl(corpus, out);
    std::cout << corpus.name << ": " << corpus.examples.size() << " examples, " << corpus.classes << " classes";
    if (corpus.has_standard_split) {
        std::cout << " (train " << corpus.count(Split::train) << ", dev " << corpus.count(Split::dev) << ", test "
                  << corpus.count(Split::test) << ")";
    } else {
        std::cout << " (cross-validated)";
    }
    std::cout << "\n";
    if (corpus.replaced_bytes > 0) std::cout << "  replaced " << corpus.replaced_bytes << " invalid UTF-8 bytes\n";
    if (corpus.rejected_empty > 0) std::cout << "  rejected " << corpus.rejected_empty << " empty sentences\n";
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

int cmd_train(const std::string& config_path) {
    ExperimentSpec spec = load_experiment_config(config_path);
    if (spec.datasets.size() != 1 || spec.bodies.size() != 1 || spec.heads.size() != 1) {
        throw InvalidConfig("train runs a single cell: set exactly one dataset, one body and one head");
    }
    GridOptions options;
    options.resume = true;
    options.log = log_line;
    const GridSummary summary = run_grid(spec, options);
    const auto& [key, cell] = *summary.grid.cells.begin();
    if (cell.status != CellStatus::complete) {
        std::cerr << key.id() << " failed: " << cell.error << "\n";
        return kExitFailedCells;
    }
    std::cout << model_name(key.body, key.head) << " on " << key.dataset << ": " << format_percent(cell.accuracy)
              << "\n";
    return kExitOk;
}

int cmd_grid(const std::string& config_path, std::size_t workers, bool resume) {
    const ExperimentSpec spec = load_experiment_config(config_path);
    GridOptions options;
    options.resume = resume;
    options.workers = workers;
    options.log = log_line;
    const GridSummary summary = run_grid(spec, options);
    std::cout << summary.grid.cells.size() << " cells; " << summary.runs_trained << " runs trained, "
              << summary.runs_reused << " reused\n";
    if (const auto failed = summary.grid.failed_count(); failed > 0) {
        std::cout << failed << " cell(s) failed\n";
        return kExitFailedCells;
    }
    return kExitOk;
}

int cmd_report(const std::string& grid_dir, const std::vector<std::string>& tables, const std::string& fmt) {
    const TableFormat format = fmt == "csv" ? TableFormat::csv : TableFormat::markdown;
    const ResultsGrid grid = load_grid(grid_dir);
    std::ostringstream os;
    bool first = true;
    auto section = [&](const std::string& text) {
        if (!first) os << "\n";
        first = false;
        os << text;
    };
    for (const auto& t : tables) {
        if (t == "results") {
            section(render_results_tables(grid, format));
        } else if (t == "improvement") {
            for (Body b : grid.bodies) section(render_improvement_table(grid, b, format));
        } else if (t == "winners") {
            section(render_winner_table(grid, format));
        } else {
            throw InvalidConfig("unknown table '" + t + "' (expected results, improvement or winners)");
        }
    }
    std::cout << os.str();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrent sentence classifiers: tail, pooling and hybrid feature heads"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    std::string dataset;
    std::vector<std::string> inputs;
    std::string out;
    auto* prepare = app.add_subcommand("prepare", "Convert a raw dataset into the JSONL corpus format");
    prepare->add_option("dataset", dataset, "MR, SST-1, SST-2, TREC, Subj or CR")->required();
    prepare->add_option("--in", inputs, "Raw source files, in the dataset's documented order")->required();
    prepare->add_option("--out", out, "Output JSONL path")->required();

    std::string config_path;
    auto* train = app.add_subcommand("train", "Train and evaluate a single (body, head, dataset) cell");
    train->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);

    std::size_t workers = 0;
    bool resume = false;
    auto* grid = app.add_subcommand("grid", "Run every selected cell of the experiment grid");
    grid->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    grid->add_option("--workers", workers, "Parallel cells (overrides the config)");
    grid->add_flag("--resume", resume, "Continue an existing grid, reusing completed runs");

    std::string grid_dir;
    std::vector<std::string> tables = {"results", "improvement", "winners"};
    std::string fmt = "md";
    auto* report = app.add_subcommand("report", "Render result, improvement and winner tables");
    report->add_option("--grid", grid_dir, "Grid output directory")->required();
    report->add_option("--tables", tables, "Comma-separated: results,improvement,winners")->delimiter(',');
    report->add_option("--format", fmt, "md or csv")->check(CLI::IsMember({"md", "csv"}));

    bool dump_defaults = false;
    auto* config = app.add_subcommand("config", "Inspect configuration");
    config->add_flag("--dump-defaults", dump_defaults, "Print every config key with its default value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*prepare) return cmd_prepare(dataset, inputs, out);
        if (*train) return cmd_train(config_path);
        if (*grid) return cmd_grid(config_path, workers, resume);
        if (*report) return cmd_report(grid_dir, tables, fmt);
        if (*config) {
            if (!dump_defaults) {
                std::cerr << "config: nothing to do (try --dump-defaults)\n";
                return kExitUsage;
            }
            std::cout << dump_experiment_config(ExperimentSpec{});
            return kExitOk;
        }
    } catch (const IncompleteGrid& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailedCells;
    } catch (const DivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailedCells;
    } catch (const IntegrityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
