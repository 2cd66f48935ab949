#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "sentpool/classifier.hpp"
#include "sentpool/data.hpp"
#include "sentpool/embeddings.hpp"
#include "sentpool/heads.hpp"
#include "sentpool/rnn_core.hpp"

namespace sentpool {

// Hidden sizes that give both bodies ~7.2e5 recurrent parameters.
inline constexpr std::size_t kLstmHidden = 300;
inline constexpr std::size_t kBlstmHidden = 185;

inline constexpr double kLearningRate = 0.1;
inline constexpr std::size_t kMaxEpochs = 25;
inline constexpr std::size_t kPatience = 5;

struct ModelConfig {
    Body body = Body::lstm;
    HeadKind head = HeadKind::max_pool;
    std::size_t hidden_dim = 0;  // 0: kLstmHidden / kBlstmHidden by body
    std::size_t input_dim = kEmbeddingDim;
    double dropout_rate = kDropoutRate;
    double learning_rate = kLearningRate;
    double epsilon = kAdagradEpsilon;
    std::size_t max_epochs = kMaxEpochs;
    std::size_t patience = kPatience;
    std::uint64_t seed = 1;
    double init_bound = kInitBound;
    // Gradients of batch_size examples are averaged before one update.
    std::size_t batch_size = 1;
    // Global L2 clip on the update's gradient; 0 disables.
    double clip_norm = 0.0;
    // Reserved; peephole connections are not implemented.
    bool peepholes = false;

    std::size_t resolved_hidden_dim() const noexcept;
    // Throws InvalidConfig.
    void validate() const;
};

struct StepResult {
    double loss = 0.0;
    std::size_t predicted = 0;
};

std::string model_config_to_json(const ModelConfig& config);
// Missing keys keep their defaults.
ModelConfig model_config_from_json(const std::string& text);

// Body + head + classifier for one of the ten variants.
class Model {
public:
    Model(const ModelConfig& config, std::size_t classes);

    const ModelConfig& config() const noexcept { return config_; }
    std::size_t classes() const noexcept { return classifier_.classes; }
    std::size_t hidden_dim() const noexcept { return config_.resolved_hidden_dim(); }
    std::size_t feature_dim() const noexcept;

    HiddenSequence encode(const Matrix& xs) const;
    FeatureVector features(const Matrix& xs) const;
    // Evaluation mode: no dropout.
    Prediction predict(const Matrix& xs) const;
    // Evaluation-mode loss; no gradients touched.
    double loss(const Matrix& xs, std::size_t gold) const;

    // One forward/backward pass, accumulating into every parameter's grad.
    // With training = true, dropout draws come from `rng`.
    StepResult accumulate_gradients(const Matrix& xs, std::size_t gold, Rng& rng, bool training = true);

    std::vector<ParamTensor*> parameters();
    std::vector<const ParamTensor*> parameters() const;

    std::size_t recurrent_count() const noexcept;
    std::size_t classifier_count() const noexcept { return classifier_.count(); }
    // FNV-1a over every parameter value, in parameters() order.
    std::uint64_t checksum() const;

    ClassifierParams& classifier() noexcept { return classifier_; }
    const ClassifierParams& classifier() const noexcept { return classifier_; }
    LstmParams& lstm() { return std::get<LstmParams>(recurrent_); }
    BlstmParams& blstm() { return std::get<BlstmParams>(recurrent_); }

    void save(const std::filesystem::path& path, const std::string& extra_metadata = "{}") const;
    static Model load(const std::filesystem::path& path);

private:
    ModelConfig config_;
    std::variant<LstmParams, BlstmParams> recurrent_;
    ClassifierParams classifier_;
};

// Fresh parameters from uniform_init seeded by config.seed.
Model build_model(const ModelConfig& config, std::size_t classes);

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double mean_train_loss = 0.0;
    double dev_accuracy = 0.0;
    bool improved = false;
};

struct TrainedModel {
    Model model;
    std::size_t epoch_selected = 0;  // 1-based; 0 if no epoch ran
    std::vector<double> dev_accuracy_history;
    std::vector<double> train_loss_history;
};

struct EvalResult {
    double accuracy = 0.0;
    std::size_t n_correct = 0;
    std::size_t n_total = 0;
    std::vector<std::size_t> per_class_total;
    std::vector<std::size_t> per_class_correct;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Per-example Adagrad over a shuffle re-drawn every epoch, early stopping on
// dev accuracy. Returns the parameters of the best dev epoch. Throws
// DivergedError on a non-finite loss or gradient.
TrainedModel train(Model model, const std::vector<Example>& train_set, const std::vector<Example>& dev_set,
                   const EmbeddingTable& embeddings, const EpochCallback& on_epoch = {});

// Dropout off, argmax prediction. Mutates nothing.
EvalResult evaluate(const Model& model, const std::vector<Example>& examples, const EmbeddingTable& embeddings);

struct ParamReport {
    std::size_t recurrent = 0;
    std::size_t classifier = 0;
    std::size_t total = 0;
};

ParamReport param_report(const Model& model);

}  // namespace sentpool
