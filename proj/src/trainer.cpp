#include "sentpool/trainer.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "sentpool/checkpoint.hpp"
#include "sentpool/errors.hpp"

namespace sentpool {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 0;

std::uint64_t epoch_stream(std::size_t epoch) { return 1 + epoch; }

}  // namespace

std::size_t ModelConfig::resolved_hidden_dim() const noexcept {
    if (hidden_dim != 0) return hidden_dim;
    return body == Body::lstm ? kLstmHidden : kBlstmHidden;
}

void ModelConfig::validate() const {
    if (input_dim == 0) throw InvalidConfig("input_dim must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidConfig("dropout must lie in [0, 1)");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidConfig("learning_rate must be >= 0");
    if (!(epsilon > 0.0)) throw InvalidConfig("epsilon must be > 0");
    if (!(init_bound > 0.0)) throw InvalidConfig("init_bound must be > 0");
    if (batch_size == 0) throw InvalidConfig("batch_size must be >= 1");
    if (!(clip_norm >= 0.0)) throw InvalidConfig("clip_norm must be >= 0");
    if (patience == 0) throw InvalidConfig("patience must be >= 1");
    if (peepholes) throw InvalidConfig("peepholes = true is reserved and not implemented");
}

std::string model_config_to_json(const ModelConfig& c) {
    const json j = {
        {"body", std::string(to_string(c.body))},
        {"head", std::string(to_string(c.head))},
        {"hidden_dim", c.resolved_hidden_dim()},
        {"input_dim", c.input_dim},
        {"dropout", c.dropout_rate},
        {"learning_rate", c.learning_rate},
        {"epsilon", c.epsilon},
        {"max_epochs", c.max_epochs},
        {"patience", c.patience},
        {"seed", c.seed},
        {"init_bound", c.init_bound},
        {"batch_size", c.batch_size},
        {"clip_norm", c.clip_norm},
        {"peepholes", c.peepholes},
    };
    return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("model config: ") + e.what());
    }
    ModelConfig c;
    try {
        if (j.contains("body")) c.body = parse_body(j["body"].get<std::string>());
        if (j.contains("head")) c.head = parse_head(j["head"].get<std::string>());
        c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
        c.input_dim = j.value("input_dim", c.input_dim);
        c.dropout_rate = j.value("dropout", c.dropout_rate);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.patience = j.value("patience", c.patience);
        c.seed = j.value("seed", c.seed);
        c.init_bound = j.value("init_bound", c.init_bound);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.clip_norm = j.value("clip_norm", c.clip_norm);
        c.peepholes = j.value("peepholes", c.peepholes);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("model config: ") + e.what());
    }
    return c;
}

// --- Model ------------------------------------------------------------------------

Model::Model(const ModelConfig& config, std::size_t classes) : config_(config) {
    config_.validate();
    config_.hidden_dim = config_.resolved_hidden_dim();
    Rng rng(derive_seed(config_.seed, kInitStream));
    if (config_.body == Body::lstm) {
        recurrent_ = LstmParams::random(config_.input_dim, config_.hidden_dim, rng, config_.init_bound, "lstm");
    } else {
        recurrent_ = BlstmParams::random(config_.input_dim, config_.hidden_dim, rng, config_.init_bound);
    }
    classifier_ = ClassifierParams::random(classes, feature_dim(), rng, config_.init_bound);
}

std::size_t Model::feature_dim() const noexcept {
    return sentpool::feature_dim(config_.head, config_.body, hidden_dim());
}

HiddenSequence Model::encode(const Matrix& xs) const {
    if (config_.body == Body::lstm) return lstm_forward_sequence(std::get<LstmParams>(recurrent_), xs);
    return blstm_forward(std::get<BlstmParams>(recurrent_), xs);
}

FeatureVector Model::features(const Matrix& xs) const { return compute_feature(config_.head, encode(xs)); }

Prediction Model::predict(const Matrix& xs) const { return classifier_forward(classifier_, features(xs).values); }

double Model::loss(const Matrix& xs, std::size_t gold) const { return cross_entropy(predict(xs), gold); }

StepResult Model::accumulate_gradients(const Matrix& xs, std::size_t gold, Rng& rng, bool training) {
    const HiddenSequence seq = encode(xs);
    const FeatureVector feature = compute_feature(config_.head, seq);
    const DropoutResult dropped = dropout(feature.values, config_.dropout_rate, training, rng);
    const Prediction pred = classifier_forward(classifier_, dropped.values);

    StepResult result;
    result.loss = cross_entropy(pred, gold);
    result.predicted = pred.label;

    const Vector grad_feature = classifier_backward(classifier_, dropped.values, dropped.mask, pred, gold);
    const Matrix grad_states = head_backward(feature, seq, grad_feature);
    // Input gradients are discarded: the embeddings are static.
    if (config_.body == Body::lstm) {
        lstm_backward_sequence(std::get<LstmParams>(recurrent_), seq.traces()[0], grad_states);
    } else {
        blstm_backward(std::get<BlstmParams>(recurrent_), seq, grad_states);
    }
    return result;
}

std::vector<ParamTensor*> Model::parameters() {
    std::vector<ParamTensor*> out =
        std::visit([](auto& p) -> std::vector<ParamTensor*> { return p.tensors(); }, recurrent_);
    for (auto* t : classifier_.tensors()) out.push_back(t);
    return out;
}

std::vector<const ParamTensor*> Model::parameters() const {
    std::vector<const ParamTensor*> out =
        std::visit([](const auto& p) -> std::vector<const ParamTensor*> { return p.tensors(); }, recurrent_);
    for (auto* t : classifier_.tensors()) out.push_back(t);
    return out;
}

std::size_t Model::recurrent_count() const noexcept {
    return std::visit([](const auto& p) { return p.count(); }, recurrent_);
}

std::uint64_t Model::checksum() const {
    std::uint64_t h = 0;
    for (const auto* t : parameters()) h = derive_seed(h, fnv1a(t->value.data()));
    return h;
}

void Model::save(const std::filesystem::path& path, const std::string& extra_metadata) const {
    json meta;
    meta["config"] = json::parse(model_config_to_json(config_));
    meta["classes"] = classes();
    meta["extra"] = json::parse(extra_metadata);
    Checkpoint ckpt;
    ckpt.metadata = meta.dump();
    for (const auto* t : parameters()) ckpt.tensors.push_back({t->name, t->value});
    write_checkpoint(path, ckpt);
}

Model Model::load(const std::filesystem::path& path) {
    const Checkpoint ckpt = read_checkpoint(path);
    json meta;
    try {
        meta = json::parse(ckpt.metadata);
    } catch (const json::exception& e) {
        throw ParseError(ParseError::Unit::byte_offset, 0, std::string("checkpoint metadata: ") + e.what());
    }
    Model model(model_config_from_json(meta.at("config").dump()), meta.at("classes").get<std::size_t>());
    for (auto* t : model.parameters()) {
        const Matrix& stored = ckpt.at(t->name);
        if (stored.rows() != t->value.rows() || stored.cols() != t->value.cols()) {
            throw InvalidShape("checkpoint tensor '" + t->name + "' has shape " + stored.shape_string() +
                               ", model expects " + t->value.shape_string());
        }
        t->value = stored;
    }
    return model;
}

Model build_model(const ModelConfig& config, std::size_t classes) { return Model(config, classes); }

// --- training ------------------------------------------------------------------------

namespace {

void apply_update(Model& model, std::size_t batch_count) {
    const ModelConfig& cfg = model.config();
    auto params = model.parameters();
    if (batch_count > 1) {
        const double scale = 1.0 / static_cast<double>(batch_count);
        for (auto* p : params) {
            for (auto& g : p->grad.data()) g *= scale;
        }
    }
    if (cfg.clip_norm > 0.0) {
        double sq = 0.0;
        for (auto* p : params) {
            for (double g : p->grad.data()) sq += g * g;
        }
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm) {
            const double scale = cfg.clip_norm / norm;
            for (auto* p : params) {
                for (auto& g : p->grad.data()) g *= scale;
            }
        }
    }
    for (auto* p : params) adagrad_step(*p, cfg.learning_rate, cfg.epsilon);
}

std::vector<Matrix> snapshot(const Model& model) {
    std::vector<Matrix> values;
    for (const auto* p : model.parameters()) values.push_back(p->value);
    return values;
}

void restore(Model& model, const std::vector<Matrix>& values) {
    auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

TrainedModel train(Model model, const std::vector<Example>& train_set, const std::vector<Example>& dev_set,
                   const EmbeddingTable& embeddings, const EpochCallback& on_epoch) {
    if (train_set.empty()) throw EmptyInput("train: empty training set");
    if (dev_set.empty()) throw EmptyInput("train: empty dev set");
    const ModelConfig cfg = model.config();
    if (embeddings.dim() != cfg.input_dim) {
        throw DimensionError("train: embedding dimension " + std::to_string(embeddings.dim()) +
                             " vs model input_dim " + std::to_string(cfg.input_dim));
    }
    for (const auto& e : train_set) {
        if (e.label >= model.classes()) throw InvalidLabel("train: label " + std::to_string(e.label) + " out of range");
    }
    for (auto* p : model.parameters()) p->zero_grad();

    std::size_t epoch_selected = 0;
    std::vector<double> dev_history;
    std::vector<double> loss_history;
    double best_dev = -1.0;
    std::vector<Matrix> best = snapshot(model);
    std::size_t stale = 0;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, epoch_stream(epoch)));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(std::span<std::size_t>(order));

        double loss_sum = 0.0;
        std::size_t pending = 0;
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            const Example& ex = train_set[order[pos]];
            const Matrix xs = embeddings.embed_sentence(ex.tokens);
            const StepResult step = model.accumulate_gradients(xs, ex.label, rng, true);
            if (!std::isfinite(step.loss)) {
                throw DivergedError(epoch, order[pos],
                                    "training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                                        ", example " + std::to_string(order[pos]));
            }
            loss_sum += step.loss;
            if (++pending == cfg.batch_size || pos + 1 == order.size()) {
                try {
                    apply_update(model, pending);
                } catch (const NumericFault& fault) {
                    throw DivergedError(epoch, order[pos],
                                        "training diverged at epoch " + std::to_string(epoch) + ", example " +
                                            std::to_string(order[pos]) + ": " + fault.what());
                }
                pending = 0;
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_train_loss = loss_sum / static_cast<double>(order.size());
        stats.dev_accuracy = evaluate(model, dev_set, embeddings).accuracy;
        stats.improved = stats.dev_accuracy > best_dev;
        loss_history.push_back(stats.mean_train_loss);
        dev_history.push_back(stats.dev_accuracy);
        if (stats.improved) {
            best_dev = stats.dev_accuracy;
            best = snapshot(model);
            epoch_selected = epoch;
            stale = 0;
        } else {
            ++stale;
        }
        if (on_epoch) on_epoch(stats);
        if (stale >= cfg.patience) break;
    }
    restore(model, best);
    return TrainedModel{std::move(model), epoch_selected, std::move(dev_history), std::move(loss_history)};
}

EvalResult evaluate(const Model& model, const std::vector<Example>& examples, const EmbeddingTable& embeddings) {
    if (examples.empty()) throw EmptyInput("evaluate: no examples");
    EvalResult r;
    r.per_class_total.assign(model.classes(), 0);
    r.per_class_correct.assign(model.classes(), 0);
    for (const auto& ex : examples) {
        if (ex.label >= model.classes()) {
            throw InvalidLabel("evaluate: label " + std::to_string(ex.label) + " out of range");
        }
        const Prediction pred = model.predict(embeddings.embed_sentence(ex.tokens));
        ++r.n_total;
        ++r.per_class_total[ex.label];
        if (pred.label == ex.label) {
            ++r.n_correct;
            ++r.per_class_correct[ex.label];
        }
    }
    r.accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n_total);
    return r;
}

ParamReport param_report(const Model& model) {
    ParamReport r;
    r.recurrent = model.recurrent_count();
    r.classifier = model.classifier_count();
    r.total = r.recurrent + r.classifier;
    return r;
}

}  // namespace sentpool
