#pragma once

#include <span>
#include <vector>

#include "sentpool/numkit.hpp"

namespace sentpool {

inline constexpr double kDropoutRate = 0.5;

// y = softmax(W h + b)
struct ClassifierParams {
    std::size_t classes = 0;
    std::size_t input_dim = 0;
    ParamTensor W;  // classes x input_dim
    ParamTensor b;  // classes x 1

    static ClassifierParams zeros(std::size_t classes, std::size_t input_dim);
    static ClassifierParams random(std::size_t classes, std::size_t input_dim, Rng& rng, double bound = kInitBound);

    std::size_t count() const noexcept { return W.count() + b.count(); }
    std::vector<ParamTensor*> tensors() { return {&W, &b}; }
    std::vector<const ParamTensor*> tensors() const { return {&W, &b}; }
};

// Inverted dropout. mask[i] is the factor applied to h[i]: 0 or 1/(1-rate)
// while training, 1 in evaluation.
struct DropoutResult {
    Vector values;
    Vector mask;
};

DropoutResult dropout(std::span<const double> h, double rate, bool training, Rng& rng);

struct Prediction {
    Vector logits;
    Vector probs;
    std::size_t label = 0;
};

// Max-subtracted softmax.
Vector softmax(std::span<const double> logits);

Prediction classifier_forward(const ClassifierParams& params, std::span<const double> h);

// -ln probs[gold], evaluated as logsumexp(logits) - logits[gold] when logits
// are available. Throws InvalidLabel when gold >= K.
double cross_entropy(const Prediction& pred, std::size_t gold);

// Accumulates dL/dW and dL/db given the (post-dropout) features that were fed
// forward; returns dL/dh for the pre-dropout features.
Vector classifier_backward(ClassifierParams& params, std::span<const double> h_dropped,
                           std::span<const double> mask, const Prediction& pred, std::size_t gold);

}  // namespace sentpool
