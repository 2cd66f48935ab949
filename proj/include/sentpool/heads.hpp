#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentpool/rnn_core.hpp"

namespace sentpool {

enum class HeadKind { tail, mean_pool, max_pool, hybrid_mean, hybrid_max };

inline constexpr HeadKind kAllHeads[] = {HeadKind::tail, HeadKind::mean_pool, HeadKind::max_pool,
                                         HeadKind::hybrid_mean, HeadKind::hybrid_max};
inline constexpr Body kAllBodies[] = {Body::lstm, Body::blstm};

// Config spellings: "tail", "mean_pool", ... and "lstm", "blstm".
std::string_view to_string(HeadKind kind) noexcept;
std::string_view to_string(Body body) noexcept;
HeadKind parse_head(std::string_view s);
Body parse_body(std::string_view s);
// Table row names: "LSTM_MaxPool", "BLSTM_HybridMeanPool", ...
std::string_view display_name(HeadKind kind) noexcept;
std::string_view display_name(Body body) noexcept;
std::string model_name(Body body, HeadKind kind);

bool uses_max_pool(HeadKind kind) noexcept;
bool uses_pooling(HeadKind kind) noexcept;
bool is_hybrid(HeadKind kind) noexcept;

std::size_t tail_dim(Body body, std::size_t hidden_dim) noexcept;
std::size_t feature_dim(HeadKind kind, Body body, std::size_t hidden_dim) noexcept;

struct FeatureVector {
    HeadKind kind = HeadKind::tail;
    Body body = Body::lstm;
    Vector values;
    // Winning timestep per pooled position; present iff kind involves max
    // pooling. For hybrids it indexes the pooled slice.
    std::optional<std::vector<std::size_t>> argmax_trace;
    std::uint64_t source_id = 0;

    std::size_t dim() const noexcept { return values.size(); }
};

// lstm: h'_m. blstm: [forward state at position m ; reverse state at position 1].
FeatureVector tail_feature(const HiddenSequence& seq);
// Column means over all m rows.
FeatureVector mean_pool(const HiddenSequence& seq);
// Column maxima; ties go to the smallest timestep.
FeatureVector max_pool(const HiddenSequence& seq);
// [tail ; pool]. Both must come from the same sequence.
FeatureVector hybrid_feature(const FeatureVector& tail, const FeatureVector& pool);

FeatureVector compute_feature(HeadKind kind, const HiddenSequence& seq);

// Adjoint of the head: maps dL/dfeature to dL/dstates (m x width).
Matrix head_backward(const FeatureVector& feature, const HiddenSequence& seq, std::span<const double> grad);

}  // namespace sentpool
