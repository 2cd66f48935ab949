#include "sentpool/heads.hpp"

#include "sentpool/errors.hpp"

namespace sentpool {

std::string_view to_string(HeadKind kind) noexcept {
    switch (kind) {
        case HeadKind::tail: return "tail";
        case HeadKind::mean_pool: return "mean_pool";
        case HeadKind::max_pool: return "max_pool";
        case HeadKind::hybrid_mean: return "hybrid_mean";
        case HeadKind::hybrid_max: return "hybrid_max";
    }
    return "?";
}

std::string_view to_string(Body body) noexcept { return body == Body::lstm ? "lstm" : "blstm"; }

HeadKind parse_head(std::string_view s) {
    for (HeadKind k : kAllHeads) {
        if (s == to_string(k) || s == display_name(k)) return k;
    }
    throw InvalidConfig("unknown head '" + std::string(s) +
                        "' (expected tail, mean_pool, max_pool, hybrid_mean or hybrid_max)");
}

Body parse_body(std::string_view s) {
    if (s == "lstm" || s == "LSTM") return Body::lstm;
    if (s == "blstm" || s == "BLSTM") return Body::blstm;
    throw InvalidConfig("unknown body '" + std::string(s) + "' (expected lstm or blstm)");
}

std::string_view display_name(HeadKind kind) noexcept {
    switch (kind) {
        case HeadKind::tail: return "Tail";
        case HeadKind::mean_pool: return "MeanPool";
        case HeadKind::max_pool: return "MaxPool";
        case HeadKind::hybrid_mean: return "HybridMeanPool";
        case HeadKind::hybrid_max: return "HybridMaxPool";
    }
    return "?";
}

std::string_view display_name(Body body) noexcept { return body == Body::lstm ? "LSTM" : "BLSTM"; }

std::string model_name(Body body, HeadKind kind) {
    return std::string(display_name(body)) + "_" + std::string(display_name(kind));
}

bool uses_max_pool(HeadKind kind) noexcept { return kind == HeadKind::max_pool || kind == HeadKind::hybrid_max; }

bool uses_pooling(HeadKind kind) noexcept { return kind != HeadKind::tail; }

bool is_hybrid(HeadKind kind) noexcept { return kind == HeadKind::hybrid_mean || kind == HeadKind::hybrid_max; }

std::size_t tail_dim(Body body, std::size_t hidden_dim) noexcept {
    return body == Body::blstm ? 2 * hidden_dim : hidden_dim;
}

std::size_t feature_dim(HeadKind kind, Body body, std::size_t hidden_dim) noexcept {
    const std::size_t width = tail_dim(body, hidden_dim);
    return is_hybrid(kind) ? 2 * width : width;
}

FeatureVector tail_feature(const HiddenSequence& seq) {
    FeatureVector out;
    out.kind = HeadKind::tail;
    out.body = seq.body();
    out.source_id = seq.id();
    const auto fwd = seq.forward_last();
    out.values.assign(fwd.begin(), fwd.end());
    if (seq.body() == Body::blstm) {
        const auto bwd = seq.backward_last();
        out.values.insert(out.values.end(), bwd.begin(), bwd.end());
    }
    return out;
}

FeatureVector mean_pool(const HiddenSequence& seq) {
    FeatureVector out;
    out.kind = HeadKind::mean_pool;
    out.body = seq.body();
    out.source_id = seq.id();
    out.values.assign(seq.width(), 0.0);
    for (std::size_t j = 0; j < seq.length(); ++j) {
        const auto row = seq.states().row(j);
        for (std::size_t i = 0; i < row.size(); ++i) out.values[i] += row[i];
    }
    const auto m = static_cast<double>(seq.length());
    for (auto& v : out.values) v /= m;
    return out;
}

FeatureVector max_pool(const HiddenSequence& seq) {
    FeatureVector out;
    out.kind = HeadKind::max_pool;
    out.body = seq.body();
    out.source_id = seq.id();
    const auto first = seq.states().row(0);
    out.values.assign(first.begin(), first.end());
    std::vector<std::size_t> trace(seq.width(), 0);
    for (std::size_t j = 1; j < seq.length(); ++j) {
        const auto row = seq.states().row(j);
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i] > out.values[i]) {
                out.values[i] = row[i];
                trace[i] = j;
            }
        }
    }
    out.argmax_trace = std::move(trace);
    return out;
}

FeatureVector hybrid_feature(const FeatureVector& tail, const FeatureVector& pool) {
    if (tail.kind != HeadKind::tail) throw ContractViolation("hybrid_feature: first argument is not a tail feature");
    if (pool.kind != HeadKind::mean_pool && pool.kind != HeadKind::max_pool) {
        throw ContractViolation("hybrid_feature: second argument is not a pooled feature");
    }
    if (tail.source_id != pool.source_id || tail.body != pool.body) {
        throw ContractViolation("hybrid_feature: tail and pool come from different hidden sequences");
    }
    FeatureVector out;
    out.kind = pool.kind == HeadKind::max_pool ? HeadKind::hybrid_max : HeadKind::hybrid_mean;
    out.body = tail.body;
    out.source_id = tail.source_id;
    out.values = tail.values;
    out.values.insert(out.values.end(), pool.values.begin(), pool.values.end());
    out.argmax_trace = pool.argmax_trace;
    return out;
}

FeatureVector compute_feature(HeadKind kind, const HiddenSequence& seq) {
    switch (kind) {
        case HeadKind::tail: return tail_feature(seq);
        case HeadKind::mean_pool: return mean_pool(seq);
        case HeadKind::max_pool: return max_pool(seq);
        case HeadKind::hybrid_mean: return hybrid_feature(tail_feature(seq), mean_pool(seq));
        case HeadKind::hybrid_max: return hybrid_feature(tail_feature(seq), max_pool(seq));
    }
    throw ContractViolation("compute_feature: unknown head");
}

namespace {

void route_tail(const HiddenSequence& seq, std::span<const double> grad, Matrix& out) {
    const std::size_t h = seq.hidden_dim();
    auto last = out.row(seq.length() - 1);
    for (std::size_t k = 0; k < h; ++k) last[k] += grad[k];
    if (seq.body() == Body::blstm) {
        auto first = out.row(0);
        for (std::size_t k = 0; k < h; ++k) first[h + k] += grad[h + k];
    }
}

void route_mean(const HiddenSequence& seq, std::span<const double> grad, Matrix& out) {
    const double inv_m = 1.0 / static_cast<double>(seq.length());
    for (std::size_t j = 0; j < seq.length(); ++j) {
        auto row = out.row(j);
        for (std::size_t i = 0; i < row.size(); ++i) row[i] += grad[i] * inv_m;
    }
}

void route_max(const std::vector<std::size_t>& trace, std::span<const double> grad, Matrix& out) {
    for (std::size_t i = 0; i < trace.size(); ++i) out(trace[i], i) += grad[i];
}

}  // namespace

Matrix head_backward(const FeatureVector& feature, const HiddenSequence& seq, std::span<const double> grad) {
    if (feature.source_id != seq.id()) {
        throw ContractViolation("head_backward: feature was not computed from this hidden sequence");
    }
    const std::size_t want = feature_dim(feature.kind, seq.body(), seq.hidden_dim());
    if (grad.size() != want || feature.dim() != want) {
        throw InvalidShape("head_backward: gradient length " + std::to_string(grad.size()) + " vs feature dim " +
                           std::to_string(want));
    }
    if (uses_max_pool(feature.kind) && (!feature.argmax_trace || feature.argmax_trace->size() != seq.width())) {
        throw ContractViolation("head_backward: max-pool feature is missing its argmax trace");
    }

    Matrix out(seq.length(), seq.width());
    const std::size_t width = seq.width();
    switch (feature.kind) {
        case HeadKind::tail: route_tail(seq, grad, out); break;
        case HeadKind::mean_pool: route_mean(seq, grad, out); break;
        case HeadKind::max_pool: route_max(*feature.argmax_trace, grad, out); break;
        case HeadKind::hybrid_mean:
            route_tail(seq, grad.first(width), out);
            route_mean(seq, grad.subspan(width), out);
            break;
        case HeadKind::hybrid_max:
            route_tail(seq, grad.first(width), out);
            route_max(*feature.argmax_trace, grad.subspan(width), out);
            break;
    }
    return out;
}

}  // namespace sentpool
