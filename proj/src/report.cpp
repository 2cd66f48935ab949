#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sentpool/errors.hpp"
#include "sentpool/experiments.hpp"

namespace sentpool {

namespace {

// Published datasets first in their customary order, then anything else in
// the order the grid lists it.
std::vector<std::string> ordered_datasets(const ResultsGrid& grid) {
    std::vector<std::string> out;
    for (const auto& info : known_datasets()) {
        const std::string name(info.name);
        if (std::find(grid.datasets.begin(), grid.datasets.end(), name) != grid.datasets.end()) out.push_back(name);
    }
    for (const auto& d : grid.datasets) {
        if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
    }
    return out;
}

std::vector<HeadKind> ordered_heads(const ResultsGrid& grid) {
    std::vector<HeadKind> out;
    for (HeadKind h : kAllHeads) {
        if (std::find(grid.heads.begin(), grid.heads.end(), h) != grid.heads.end()) out.push_back(h);
    }
    return out;
}

void require(const ResultsGrid& grid, const std::vector<CellKey>& keys) {
    std::vector<std::string> missing;
    for (const auto& key : keys) {
        const CellResult* cell = grid.find(key);
        if (cell == nullptr || cell->status != CellStatus::complete) missing.push_back(key.id());
    }
    if (missing.empty()) return;
    std::string msg = "grid is incomplete; missing cells:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw IncompleteGrid(std::move(missing), msg);
}

double accuracy_of(const ResultsGrid& grid, Body body, HeadKind head, const std::string& dataset) {
    return grid.find({body, head, dataset})->accuracy;
}

// Rows of cells; the first row is the header.
using Table = std::vector<std::vector<std::string>>;

std::string render(const Table& table, TableFormat format) {
    std::ostringstream os;
    if (format == TableFormat::csv) {
        for (const auto& row : table) {
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
            os << '\n';
        }
        return os.str();
    }
    for (std::size_t r = 0; r < table.size(); ++r) {
        os << '|';
        for (const auto& cell : table[r]) os << ' ' << cell << " |";
        os << '\n';
        if (r == 0) {
            os << '|';
            for (std::size_t c = 0; c < table[r].size(); ++c) os << (c == 0 ? "---|" : "---:|");
            os << '\n';
        }
    }
    return os.str();
}

std::string strip_percent(std::string s) {
    if (!s.empty() && s.back() == '%') s.pop_back();
    return s;
}

}  // namespace

std::string format_percent(double accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", std::round(accuracy * 1000.0) / 10.0);
    return buf;
}

std::string format_improvement(double baseline, double best) {
    const double rel = baseline > 0.0 ? (best - baseline) / baseline * 100.0 : 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.2f%%", rel == 0.0 ? 0.0 : rel);
    return buf;
}

char winner_letter(double lstm_accuracy, double blstm_accuracy) noexcept {
    if (blstm_accuracy > lstm_accuracy) return 'B';
    if (lstm_accuracy > blstm_accuracy) return 'L';
    return '=';
}

std::string render_results_tables(const ResultsGrid& grid, TableFormat format) {
    const auto datasets = ordered_datasets(grid);
    const auto heads = ordered_heads(grid);
    std::vector<CellKey> needed;
    for (Body b : kAllBodies) {
        if (std::find(grid.bodies.begin(), grid.bodies.end(), b) == grid.bodies.end()) continue;
        for (HeadKind h : heads) {
            for (const auto& d : datasets) needed.push_back({b, h, d});
        }
    }
    require(grid, needed);

    std::ostringstream os;
    bool first = true;
    for (Body b : kAllBodies) {
        if (std::find(grid.bodies.begin(), grid.bodies.end(), b) == grid.bodies.end()) continue;
        Table table;
        std::vector<std::string> header = {format == TableFormat::csv ? "model" : "Model"};
        header.insert(header.end(), datasets.begin(), datasets.end());
        table.push_back(header);
        for (HeadKind h : heads) {
            std::vector<std::string> row = {model_name(b, h)};
            for (const auto& d : datasets) {
                const std::string pct = format_percent(accuracy_of(grid, b, h, d));
                row.push_back(format == TableFormat::csv ? strip_percent(pct) : pct);
            }
            table.push_back(row);
        }
        if (!first) os << '\n';
        first = false;
        if (format == TableFormat::markdown) {
            os << "### " << display_name(b) << " results (accuracy)\n\n";
        } else {
            os << "# " << display_name(b) << " results (accuracy %)\n";
        }
        os << render(table, format);
    }
    return os.str();
}

std::string render_improvement_table(const ResultsGrid& grid, Body body, TableFormat format) {
    const auto datasets = ordered_datasets(grid);
    std::vector<CellKey> needed;
    for (HeadKind h : kAllHeads) {
        for (const auto& d : datasets) needed.push_back({body, h, d});
    }
    require(grid, needed);

    Table table;
    std::vector<std::string> header = {format == TableFormat::csv ? "model" : "Model"};
    header.insert(header.end(), datasets.begin(), datasets.end());
    table.push_back(header);

    std::vector<std::string> base_row = {model_name(body, HeadKind::mean_pool)};
    std::vector<std::string> best_row = {"Best Run"};
    std::vector<std::string> gain_row = {"Performance Improvement"};
    for (const auto& d : datasets) {
        const double base = accuracy_of(grid, body, HeadKind::mean_pool, d);
        double best = base;
        for (HeadKind h : kAllHeads) best = std::max(best, accuracy_of(grid, body, h, d));
        const std::string b0 = format_percent(base);
        const std::string b1 = format_percent(best);
        base_row.push_back(format == TableFormat::csv ? strip_percent(b0) : b0);
        best_row.push_back(format == TableFormat::csv ? strip_percent(b1) : b1);
        gain_row.push_back(format_improvement(base, best));
    }
    table.push_back(base_row);
    table.push_back(best_row);
    table.push_back(gain_row);

    std::ostringstream os;
    if (format == TableFormat::markdown) {
        os << "### " << display_name(body) << " improvement (best run vs. " << model_name(body, HeadKind::mean_pool)
           << ")\n\n";
    } else {
        os << "# " << display_name(body) << " improvement vs " << model_name(body, HeadKind::mean_pool) << "\n";
    }
    os << render(table, format);
    return os.str();
}

std::string render_winner_table(const ResultsGrid& grid, TableFormat format) {
    const auto datasets = ordered_datasets(grid);
    std::vector<CellKey> needed;
    for (Body b : kAllBodies) {
        for (HeadKind h : kAllHeads) {
            for (const auto& d : datasets) needed.push_back({b, h, d});
        }
    }
    require(grid, needed);

    Table table;
    std::vector<std::string> header = {format == TableFormat::csv ? "model" : "Model"};
    header.insert(header.end(), datasets.begin(), datasets.end());
    table.push_back(header);
    for (HeadKind h : kAllHeads) {
        std::vector<std::string> row = {std::string(display_name(h))};
        for (const auto& d : datasets) {
            row.emplace_back(1, winner_letter(accuracy_of(grid, Body::lstm, h, d),
                                              accuracy_of(grid, Body::blstm, h, d)));
        }
        table.push_back(row);
    }
    std::ostringstream os;
    if (format == TableFormat::markdown) {
        os << "### BLSTM vs. LSTM (B: BLSTM better, L: LSTM better, =: tie)\n\n";
    } else {
        os << "# BLSTM vs LSTM winners\n";
    }
    os << render(table, format);
    return os.str();
}

}  // namespace sentpool
