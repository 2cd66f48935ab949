#include <charconv>
#include <fstream>
#include <sstream>

#include "sentpool/errors.hpp"
#include "sentpool/experiments.hpp"

namespace sentpool {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw InvalidConfig("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw InvalidConfig("config key '" + std::string(key) + "': expected true or false, got '" + std::string(value) + "'");
}

std::string_view to_string(EmbeddingFormat f) {
    switch (f) {
        case EmbeddingFormat::binary: return "binary";
        case EmbeddingFormat::text: return "text";
        case EmbeddingFormat::random: return "random";
    }
    return "binary";
}

void apply(ExperimentSpec& spec, std::string_view key, std::string_view value) {
    auto& m = spec.model;
    if (key == "datasets") {
        spec.datasets = split_list(value);
    } else if (key == "bodies") {
        spec.bodies.clear();
        for (const auto& b : split_list(value)) spec.bodies.push_back(parse_body(b));
    } else if (key == "heads") {
        spec.heads.clear();
        for (const auto& h : split_list(value)) spec.heads.push_back(parse_head(h));
    } else if (key == "seeds") {
        spec.seeds.clear();
        for (const auto& s : split_list(value)) spec.seeds.push_back(parse_number<std::uint64_t>(key, s));
    } else if (key == "data_dir") {
        spec.data_dir = std::string(value);
    } else if (key == "embeddings") {
        spec.embeddings = std::string(value);
    } else if (key == "embeddings_format") {
        if (value == "binary") spec.embeddings_format = EmbeddingFormat::binary;
        else if (value == "text") spec.embeddings_format = EmbeddingFormat::text;
        else if (value == "random") spec.embeddings_format = EmbeddingFormat::random;
        else throw InvalidConfig("embeddings_format must be binary, text or random");
    } else if (key == "output_dir") {
        spec.output_dir = std::string(value);
    } else if (key == "folds") {
        spec.folds = parse_number<std::size_t>(key, value);
    } else if (key == "dev_fraction") {
        spec.dev_fraction = parse_number<double>(key, value);
    } else if (key == "lstm_hidden") {
        spec.lstm_hidden = parse_number<std::size_t>(key, value);
    } else if (key == "blstm_hidden") {
        spec.blstm_hidden = parse_number<std::size_t>(key, value);
    } else if (key == "input_dim") {
        m.input_dim = parse_number<std::size_t>(key, value);
    } else if (key == "dropout") {
        m.dropout_rate = parse_number<double>(key, value);
    } else if (key == "learning_rate") {
        m.learning_rate = parse_number<double>(key, value);
    } else if (key == "epsilon") {
        m.epsilon = parse_number<double>(key, value);
    } else if (key == "max_epochs") {
        m.max_epochs = parse_number<std::size_t>(key, value);
    } else if (key == "patience") {
        m.patience = parse_number<std::size_t>(key, value);
    } else if (key == "init_bound") {
        m.init_bound = parse_number<double>(key, value);
    } else if (key == "batch_size") {
        m.batch_size = parse_number<std::size_t>(key, value);
    } else if (key == "clip_norm") {
        m.clip_norm = parse_number<double>(key, value);
    } else if (key == "peepholes") {
        m.peepholes = parse_bool(key, value);
    } else if (key == "oov_range") {
        spec.oov.range = parse_number<double>(key, value);
    } else if (key == "oov_seed") {
        spec.oov.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "save_checkpoints") {
        spec.save_checkpoints = parse_bool(key, value);
    } else if (key == "workers") {
        spec.workers = parse_number<std::size_t>(key, value);
    } else {
        throw InvalidConfig("unknown config key '" + std::string(key) + "'");
    }
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& fmt) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += ", ";
        out += fmt(item);
    }
    return out;
}

// Shortest text that parses back to the same double.
std::string num(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace

void ExperimentSpec::validate() const {
    if (datasets.empty() || bodies.empty() || heads.empty() || seeds.empty()) {
        throw InvalidConfig("datasets, bodies, heads and seeds must all be non-empty");
    }
    if (lstm_hidden == 0 || blstm_hidden == 0) throw InvalidConfig("hidden sizes must be >= 1");
    if (folds < 2) throw InvalidConfig("folds must be >= 2");
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) throw InvalidConfig("dev_fraction must lie in (0, 1)");
    if (embeddings_format != EmbeddingFormat::random && embeddings.empty()) {
        throw InvalidConfig("embeddings path is required unless embeddings_format = random");
    }
    if (workers == 0) throw InvalidConfig("workers must be >= 1");
    ModelConfig probe = model;
    probe.hidden_dim = lstm_hidden;
    probe.validate();
}

ExperimentSpec parse_experiment_config(std::string_view text) {
    ExperimentSpec spec;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? text.npos : nl - start);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw InvalidConfig("config line " + std::to_string(line_no) + ": expected 'key = value'");
            }
            try {
                apply(spec, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
            } catch (const InvalidConfig& e) {
                throw InvalidConfig("config line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    spec.validate();
    return spec;
}

ExperimentSpec load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

std::string dump_experiment_config(const ExperimentSpec& spec) {
    const auto& m = spec.model;
    std::ostringstream os;
    os << "# selection\n"
       << "datasets = " << join(spec.datasets, [](const std::string& s) { return s; }) << "\n"
       << "bodies = " << join(spec.bodies, [](Body b) { return std::string(to_string(b)); }) << "\n"
       << "heads = " << join(spec.heads, [](HeadKind h) { return std::string(to_string(h)); }) << "\n"
       << "seeds = " << join(spec.seeds, [](std::uint64_t s) { return std::to_string(s); }) << "\n"
       << "\n# inputs and outputs\n"
       << "data_dir = " << spec.data_dir.string() << "\n"
       << "embeddings = " << spec.embeddings.string() << "\n"
       << "embeddings_format = " << to_string(spec.embeddings_format) << "\n"
       << "oov_range = " << num(spec.oov.range) << "\n"
       << "oov_seed = " << spec.oov.seed << "\n"
       << "output_dir = " << spec.output_dir.string() << "\n"
       << "save_checkpoints = " << (spec.save_checkpoints ? "true" : "false") << "\n"
       << "workers = " << spec.workers << "\n"
       << "\n# protocol\n"
       << "folds = " << spec.folds << "\n"
       << "dev_fraction = " << num(spec.dev_fraction) << "\n"
       << "\n# model\n"
       << "lstm_hidden = " << spec.lstm_hidden << "\n"
       << "blstm_hidden = " << spec.blstm_hidden << "\n"
       << "input_dim = " << m.input_dim << "\n"
       << "dropout = " << num(m.dropout_rate) << "\n"
       << "init_bound = " << num(m.init_bound) << "\n"
       << "peepholes = " << (m.peepholes ? "true" : "false") << "\n"
       << "\n# optimisation\n"
       << "learning_rate = " << num(m.learning_rate) << "\n"
       << "epsilon = " << num(m.epsilon) << "\n"
       << "batch_size = " << m.batch_size << "\n"
       << "clip_norm = " << num(m.clip_norm) << "\n"
       << "max_epochs = " << m.max_epochs << "\n"
       << "patience = " << m.patience << "\n";
    return os.str();
}

}  // namespace sentpool
