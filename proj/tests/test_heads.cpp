#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "sentpool/errors.hpp"
#include "sentpool/heads.hpp"
#include "support/fixtures.hpp"

using namespace sentpool;
using sentpool::testing::random_sequence;

namespace {

HiddenSequence from_rows(const std::vector<Vector>& rows, Body body = Body::lstm) {
    Matrix m = Matrix::from_rows(rows);
    const std::size_t hidden = body == Body::blstm ? m.cols() / 2 : m.cols();
    return HiddenSequence(body, hidden, std::move(m), {});
}

// Independent two-pass oracle: column sums first, then one division each.
Vector mean_oracle(const Matrix& s) {
    Vector sums(s.cols(), 0.0);
    for (std::size_t c = 0; c < s.cols(); ++c) {
        for (std::size_t r = 0; r < s.rows(); ++r) sums[c] += s(r, c);
    }
    for (double& v : sums) v /= static_cast<double>(s.rows());
    return sums;
}

}  // namespace

TEST(Tail, SingleRow) {
    const auto seq = from_rows({{0.1, -0.2, 0.3}});
    EXPECT_EQ(tail_feature(seq).values, (Vector{0.1, -0.2, 0.3}));
}

TEST(Tail, BidirectionalForwardHalfFirst) {
    const auto seq = from_rows({{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}}, Body::blstm);
    const auto f = tail_feature(seq);
    ASSERT_EQ(f.dim(), 4u);
    EXPECT_EQ(f.values, (Vector{9, 10, 3, 4}));
}

TEST(Tail, AppendingTimestepMovesTail) {
    const auto a = from_rows({{1, 2}, {3, 4}});
    const auto b = from_rows({{1, 2}, {3, 4}, {5, 6}});
    EXPECT_EQ(tail_feature(a).values, (Vector{3, 4}));
    EXPECT_EQ(tail_feature(b).values, (Vector{5, 6}));
}

TEST(MeanPool, Examples) {
    EXPECT_EQ(mean_pool(from_rows({{0.5, -1}, {0.5, -1}, {0.5, -1}})).values, (Vector{0.5, -1}));
    EXPECT_EQ(mean_pool(from_rows({{1}, {3}})).values, (Vector{2}));
}

TEST(MeanPool, MatchesTwoPassOracle) {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const auto seq = random_sequence(rng, 7, 5);
        const Vector got = mean_pool(seq).values;
        const Vector want = mean_oracle(seq.states());
        for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-12);
    }
}

TEST(MaxPool, SingleRowTraceIsZero) {
    const auto f = max_pool(from_rows({{0.1, -0.4}}));
    EXPECT_EQ(f.values, (Vector{0.1, -0.4}));
    ASSERT_TRUE(f.argmax_trace);
    EXPECT_EQ(*f.argmax_trace, (std::vector<std::size_t>{0, 0}));
}

TEST(MaxPool, TieGoesToFirstRow) {
    const auto f = max_pool(from_rows({{2}, {2}}));
    EXPECT_EQ(f.values, (Vector{2}));
    EXPECT_EQ(*f.argmax_trace, (std::vector<std::size_t>{0}));
}

TEST(MaxPool, RowPermutationInvariantValues) {
    Rng rng(22);
    const auto seq = random_sequence(rng, 6, 4);
    std::vector<Vector> rows;
    for (std::size_t r = 0; r < 6; ++r) rows.emplace_back(seq.states().row(r).begin(), seq.states().row(r).end());
    std::reverse(rows.begin(), rows.end());
    std::swap(rows[1], rows[4]);
    EXPECT_EQ(max_pool(seq).values, max_pool(from_rows(rows)).values);
}

TEST(Pooling, MeanNeverExceedsMax) {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const auto seq = random_sequence(rng, 1 + rng.below(9), 3, trial % 2 ? Body::blstm : Body::lstm);
        const auto mean = mean_pool(seq).values;
        const auto mx = max_pool(seq).values;
        for (std::size_t i = 0; i < mean.size(); ++i) ASSERT_LE(mean[i], mx[i]);
    }
}

TEST(Pooling, SingleRowHeadsAgree) {
    Rng rng(24);
    const auto seq = random_sequence(rng, 1, 4);
    EXPECT_EQ(tail_feature(seq).values, mean_pool(seq).values);
    EXPECT_EQ(tail_feature(seq).values, max_pool(seq).values);
}

TEST(Hybrid, Dimensions) {
    EXPECT_EQ(feature_dim(HeadKind::hybrid_max, Body::blstm, 185), 740u);
    EXPECT_EQ(feature_dim(HeadKind::hybrid_mean, Body::lstm, 300), 600u);
    EXPECT_EQ(feature_dim(HeadKind::tail, Body::blstm, 185), 370u);
    EXPECT_EQ(feature_dim(HeadKind::max_pool, Body::lstm, 300), 300u);
}

TEST(Hybrid, SlicesEqualComponents) {
    Rng rng(25);
    for (Body body : kAllBodies) {
        const auto seq = random_sequence(rng, 5, 3, body);
        for (HeadKind kind : {HeadKind::hybrid_mean, HeadKind::hybrid_max}) {
            const auto h = compute_feature(kind, seq);
            const auto tail = tail_feature(seq).values;
            const auto pool = (kind == HeadKind::hybrid_max ? max_pool(seq) : mean_pool(seq)).values;
            ASSERT_EQ(h.dim(), tail.size() + pool.size());
            EXPECT_TRUE(std::equal(tail.begin(), tail.end(), h.values.begin()));
            EXPECT_TRUE(std::equal(pool.begin(), pool.end(), h.values.begin() + static_cast<long>(tail.size())));
            EXPECT_EQ(h.argmax_trace.has_value(), kind == HeadKind::hybrid_max);
        }
    }
}

TEST(Hybrid, MismatchedSourcesRejected) {
    Rng rng(26);
    const auto a = random_sequence(rng, 3, 2);
    const auto b = random_sequence(rng, 3, 2);
    EXPECT_THROW(hybrid_feature(tail_feature(a), max_pool(b)), ContractViolation);
}

TEST(HeadBackward, MeanSpreadsEvenly) {
    const auto seq = from_rows({{1}, {2}, {3}, {4}});
    const auto f = mean_pool(seq);
    const Matrix g = head_backward(f, seq, Vector{1.0});
    for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(g(r, 0), 0.25);
}

TEST(HeadBackward, MeanColumnSumsConserveGradient) {
    Rng rng(27);
    const auto seq = random_sequence(rng, 7, 3, Body::blstm);
    const auto f = mean_pool(seq);
    Vector grad(f.dim());
    for (auto& v : grad) v = rng.uniform(-1, 1);
    const Matrix g = head_backward(f, seq, grad);
    for (std::size_t c = 0; c < g.cols(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < g.rows(); ++r) s += g(r, c);
        EXPECT_NEAR(s, grad[c], 1e-15);
    }
}

TEST(HeadBackward, MaxRoutesOnlyToWinner) {
    const auto seq = from_rows({{0.1, 0.9}, {0.8, 0.2}, {0.3, 0.4}});
    const auto f = max_pool(seq);
    EXPECT_EQ(*f.argmax_trace, (std::vector<std::size_t>{1, 0}));
    const Matrix g = head_backward(f, seq, Vector{2.0, 3.0});
    EXPECT_EQ(g, Matrix::from_rows({{0, 3}, {2, 0}, {0, 0}}));
}

TEST(HeadBackward, TailRoutesToEndpoints) {
    const auto seq = from_rows({{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}}, Body::blstm);
    const auto f = tail_feature(seq);
    const Matrix g = head_backward(f, seq, Vector{1, 2, 3, 4});
    EXPECT_EQ(g, Matrix::from_rows({{0, 0, 3, 4}, {0, 0, 0, 0}, {1, 2, 0, 0}}));
}

TEST(HeadBackward, HybridSumsBothRoutings) {
    const auto seq = from_rows({{0.5}, {0.1}});
    const auto f = compute_feature(HeadKind::hybrid_max, seq);
    const Matrix g = head_backward(f, seq, Vector{1.0, 10.0});
    EXPECT_EQ(g, Matrix::from_rows({{10.0}, {1.0}}));
}

TEST(HeadBackward, ShapeAndSourceChecks) {
    Rng rng(28);
    const auto seq = random_sequence(rng, 3, 2);
    const auto other = random_sequence(rng, 3, 2);
    const auto f = max_pool(seq);
    EXPECT_THROW(head_backward(f, seq, Vector{1.0}), InvalidShape);
    EXPECT_THROW(head_backward(f, other, Vector{1.0, 1.0}), ContractViolation);
}

TEST(Names, DisplayAndParse) {
    EXPECT_EQ(model_name(Body::lstm, HeadKind::max_pool), "LSTM_MaxPool");
    EXPECT_EQ(model_name(Body::blstm, HeadKind::hybrid_mean), "BLSTM_HybridMeanPool");
    for (HeadKind k : kAllHeads) EXPECT_EQ(parse_head(to_string(k)), k);
    for (Body b : kAllBodies) EXPECT_EQ(parse_body(to_string(b)), b);
    EXPECT_THROW(parse_head("attention"), InvalidConfig);
}
