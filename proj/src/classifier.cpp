#include "sentpool/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "sentpool/errors.hpp"

namespace sentpool {

ClassifierParams ClassifierParams::zeros(std::size_t classes, std::size_t input_dim) {
    if (classes < 2) throw InvalidConfig("ClassifierParams: need at least two classes");
    if (input_dim == 0) throw InvalidShape("ClassifierParams: zero feature dimension");
    ClassifierParams p;
    p.classes = classes;
    p.input_dim = input_dim;
    p.W = ParamTensor("classifier.W", Matrix(classes, input_dim));
    p.b = ParamTensor("classifier.b", Matrix(classes, 1));
    return p;
}

ClassifierParams ClassifierParams::random(std::size_t classes, std::size_t input_dim, Rng& rng, double bound) {
    if (classes < 2) throw InvalidConfig("ClassifierParams: need at least two classes");
    ClassifierParams p;
    p.classes = classes;
    p.input_dim = input_dim;
    p.W = ParamTensor("classifier.W", uniform_init(classes, input_dim, rng, bound));
    p.b = ParamTensor("classifier.b", uniform_init(classes, 1, rng, bound));
    return p;
}

DropoutResult dropout(std::span<const double> h, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw InvalidConfig("dropout: rate must lie in [0, 1)");
    DropoutResult out;
    out.values.assign(h.begin(), h.end());
    out.mask.assign(h.size(), 1.0);
    if (!training || rate == 0.0) return out;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < h.size(); ++i) {
        out.mask[i] = rng.uniform01() < rate ? 0.0 : keep_scale;
        out.values[i] *= out.mask[i];
    }
    return out;
}

Vector softmax(std::span<const double> logits) {
    Vector probs(logits.begin(), logits.end());
    if (probs.empty()) return probs;
    const double top = *std::max_element(probs.begin(), probs.end());
    double total = 0.0;
    for (auto& p : probs) {
        p = std::exp(p - top);
        total += p;
    }
    for (auto& p : probs) p /= total;
    return probs;
}

Prediction classifier_forward(const ClassifierParams& params, std::span<const double> h) {
    if (h.size() != params.input_dim) {
        throw InvalidShape("classifier_forward: feature length " + std::to_string(h.size()) + " vs W " +
                           params.W.value.shape_string());
    }
    Prediction pred;
    pred.logits = params.b.value.storage();
    matvec_add(params.W.value, h, pred.logits);
    pred.probs = softmax(pred.logits);
    pred.label = static_cast<std::size_t>(
        std::distance(pred.probs.begin(), std::max_element(pred.probs.begin(), pred.probs.end())));
    return pred;
}

double cross_entropy(const Prediction& pred, std::size_t gold) {
    if (gold >= pred.probs.size()) {
        throw InvalidLabel("cross_entropy: label " + std::to_string(gold) + " out of range for " +
                           std::to_string(pred.probs.size()) + " classes");
    }
    if (pred.logits.size() != pred.probs.size()) return -std::log(pred.probs[gold]);
    const double top = *std::max_element(pred.logits.begin(), pred.logits.end());
    double total = 0.0;
    for (double z : pred.logits) total += std::exp(z - top);
    return top + std::log(total) - pred.logits[gold];
}

Vector classifier_backward(ClassifierParams& params, std::span<const double> h_dropped,
                           std::span<const double> mask, const Prediction& pred, std::size_t gold) {
    if (gold >= params.classes) {
        throw InvalidLabel("classifier_backward: label " + std::to_string(gold) + " out of range for " +
                           std::to_string(params.classes) + " classes");
    }
    if (h_dropped.size() != params.input_dim || mask.size() != params.input_dim ||
        pred.probs.size() != params.classes) {
        throw InvalidShape("classifier_backward: cache does not match W " + params.W.value.shape_string());
    }
    Vector dlogits = pred.probs;
    dlogits[gold] -= 1.0;

    outer_add(params.W.grad, dlogits, h_dropped);
    auto db = params.b.grad.data();
    for (std::size_t k = 0; k < dlogits.size(); ++k) db[k] += dlogits[k];

    Vector dh(params.input_dim, 0.0);
    matvec_transposed_add(params.W.value, dlogits, dh);
    for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= mask[i];
    return dh;
}

}  // namespace sentpool
