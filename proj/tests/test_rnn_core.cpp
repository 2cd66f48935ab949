#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "sentpool/errors.hpp"
#include "sentpool/rnn_core.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace sentpool;
using sentpool::testing::compare_gradients;
using sentpool::testing::random_matrix;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<Matrix> grads_of(const std::vector<ParamTensor*>& ps) {
    std::vector<Matrix> out;
    for (auto* p : ps) out.push_back(p->grad);
    return out;
}

Matrix flipped_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::copy(m.row(r).begin(), m.row(r).end(), out.row(m.rows() - 1 - r).begin());
    }
    return out;
}

}  // namespace

TEST(LstmCell, ZeroParamsZeroState) {
    const auto p = LstmParams::zeros(4, 3);
    const Vector x = {1, -2, 3, 0.5}, h(3, 0.0), c(3, 0.0);
    const auto out = lstm_cell_forward(p, x, h, c);
    for (double g : std::span(out.cache.gates).first(9)) EXPECT_EQ(g, 0.5);
    for (double g : std::span(out.cache.gates).subspan(9)) EXPECT_EQ(g, 0.0);
    EXPECT_EQ(out.c, Vector(3, 0.0));
    EXPECT_EQ(out.h, Vector(3, 0.0));
}

TEST(LstmCell, ZeroParamsClosedFormWithCarriedCell) {
    const auto p = LstmParams::zeros(2, 3);
    const Vector x = {0.3, 0.7}, h = {0.1, 0.2, 0.3}, c = {1.0, -2.0, 0.25};
    const auto out = lstm_cell_forward(p, x, h, c);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_DOUBLE_EQ(out.c[k], 0.5 * c[k]);
        EXPECT_DOUBLE_EQ(out.h[k], 0.5 * std::tanh(0.5 * c[k]));
    }
}

TEST(LstmCell, ShapeMismatch) {
    const auto p = LstmParams::zeros(2, 3);
    EXPECT_THROW(lstm_cell_forward(p, Vector{1, 2, 3}, Vector(3), Vector(3)), InvalidShape);
    EXPECT_THROW(lstm_cell_forward(p, Vector{1, 2}, Vector(2), Vector(3)), InvalidShape);
}

TEST(LstmCell, FiniteDifferenceParamsAndInputs) {
    Rng rng(17);
    auto p = LstmParams::random(3, 2, rng, 0.8);
    Vector x = {0.4, -0.9, 0.2}, h = {0.3, -0.5}, c = {0.7, -1.1};
    const Vector r = {0.9, -1.3}, s = {0.4, 0.6};
    auto loss = [&] {
        const auto out = lstm_cell_forward(p, x, h, c);
        return dot(r, out.h) + dot(s, out.c);
    };
    const auto out = lstm_cell_forward(p, x, h, c);
    const auto g = lstm_cell_backward(p, out.cache, r, s);
    const auto report = compare_gradients(p.tensors(), grads_of(p.tensors()), loss);
    EXPECT_LT(report.max_rel_error, 1e-6) << report.worst;

    ParamTensor xt("x", Matrix(1, 3, x)), ht("h", Matrix(1, 2, h)), ct("c", Matrix(1, 2, c));
    auto loss_in = [&] {
        const auto o = lstm_cell_forward(p, xt.value.data(), ht.value.data(), ct.value.data());
        return dot(r, o.h) + dot(s, o.c);
    };
    const auto in_report = compare_gradients({&xt, &ht, &ct},
                                             {Matrix(1, 3, g.dx), Matrix(1, 2, g.dh_prev), Matrix(1, 2, g.dc_prev)},
                                             loss_in);
    EXPECT_LT(in_report.max_rel_error, 1e-6) << in_report.worst;
}

TEST(LstmSequence, SingleStepIsDirectionFree) {
    Rng rng(2);
    const auto p = LstmParams::random(4, 3, rng);
    const Matrix xs = random_matrix(rng, 1, 4);
    EXPECT_EQ(lstm_forward_sequence(p, xs, Direction::forward).states(),
              lstm_forward_sequence(p, xs, Direction::reverse).states());
}

TEST(LstmSequence, ReverseEqualsForwardOverReversedInput) {
    Rng rng(3);
    const auto p = LstmParams::random(4, 3, rng, 0.5);
    const Matrix xs = random_matrix(rng, 6, 4);
    const auto rev = lstm_forward_sequence(p, xs, Direction::reverse);
    const auto fwd = lstm_forward_sequence(p, flipped_rows(xs), Direction::forward);
    EXPECT_EQ(rev.states(), flipped_rows(fwd.states()));
}

TEST(LstmSequence, ZeroParamsGiveZeroStates) {
    Rng rng(4);
    const auto p = LstmParams::zeros(4, 3);
    const auto seq = lstm_forward_sequence(p, random_matrix(rng, 5, 4, 3.0));
    for (double v : seq.states().data()) EXPECT_EQ(v, 0.0);
}

TEST(LstmSequence, EmptyInputRejected) {
    const auto p = LstmParams::zeros(4, 3);
    EXPECT_THROW(lstm_forward_sequence(p, Matrix(0, 4)), EmptyInput);
    EXPECT_THROW(lstm_forward_sequence(p, Matrix(2, 5)), InvalidShape);
}

TEST(LstmSequence, HiddenStatesBounded) {
    Rng rng(5);
    const auto p = LstmParams::random(4, 6, rng, 3.0);
    const auto seq = lstm_forward_sequence(p, random_matrix(rng, 30, 4, 5.0));
    for (double v : seq.states().data()) ASSERT_LE(std::abs(v), 1.0);
}

TEST(LstmSequence, ForwardIsDeterministic) {
    Rng rng(6);
    const auto p = LstmParams::random(4, 3, rng);
    const Matrix xs = random_matrix(rng, 5, 4);
    EXPECT_EQ(lstm_forward_sequence(p, xs).states(), lstm_forward_sequence(p, xs).states());
}

TEST(LstmBackward, ZeroUpstreamGivesZeroGradients) {
    Rng rng(7);
    auto p = LstmParams::random(4, 3, rng);
    const auto seq = lstm_forward_sequence(p, random_matrix(rng, 5, 4));
    const Matrix gx = lstm_backward_sequence(p, seq.traces()[0], Matrix(5, 3));
    for (auto* t : p.tensors()) {
        for (double g : t->grad.data()) EXPECT_EQ(g, 0.0);
    }
    for (double g : gx.data()) EXPECT_EQ(g, 0.0);
}

TEST(LstmBackward, SingleStepMatchesCellBackward) {
    Rng rng(8);
    auto p = LstmParams::random(4, 3, rng, 0.6);
    auto q = p;
    const Matrix xs = random_matrix(rng, 1, 4);
    const Matrix up = random_matrix(rng, 1, 3);
    const auto seq = lstm_forward_sequence(p, xs);
    const Matrix gx = lstm_backward_sequence(p, seq.traces()[0], up);
    const auto cell = lstm_cell_forward(q, xs.row(0), Vector(3), Vector(3));
    const auto g = lstm_cell_backward(q, cell.cache, up.row(0), Vector(3));
    EXPECT_EQ(p.W.grad, q.W.grad);
    EXPECT_EQ(p.U.grad, q.U.grad);
    EXPECT_EQ(p.b.grad, q.b.grad);
    EXPECT_TRUE(std::equal(g.dx.begin(), g.dx.end(), gx.row(0).begin()));
}

TEST(LstmBackward, ShapeMismatch) {
    Rng rng(9);
    auto p = LstmParams::random(4, 3, rng);
    const auto seq = lstm_forward_sequence(p, random_matrix(rng, 5, 4));
    EXPECT_THROW(lstm_backward_sequence(p, seq.traces()[0], Matrix(4, 3)), InvalidShape);
    EXPECT_THROW(lstm_backward_sequence(p, seq.traces()[0], Matrix(5, 2)), InvalidShape);
}

class BpttGradient : public ::testing::TestWithParam<Direction> {};

TEST_P(BpttGradient, MatchesFiniteDifferences) {
    Rng rng(10);
    auto p = LstmParams::random(4, 3, rng, 0.7);
    ParamTensor xs("xs", random_matrix(rng, 6, 4));
    const Matrix weights = random_matrix(rng, 6, 3);
    auto loss = [&] {
        const auto seq = lstm_forward_sequence(p, xs.value, GetParam());
        return dot(weights.data(), seq.states().data());
    };
    const auto seq = lstm_forward_sequence(p, xs.value, GetParam());
    const Matrix gx = lstm_backward_sequence(p, seq.traces()[0], weights);
    auto tensors = p.tensors();
    auto analytic = grads_of(tensors);
    tensors.push_back(&xs);
    analytic.push_back(gx);
    const auto report = compare_gradients(tensors, analytic, loss);
    EXPECT_LT(report.max_rel_error, 1e-6) << report.worst;
    EXPECT_EQ(report.checked, p.count() + 24);
}

INSTANTIATE_TEST_SUITE_P(Directions, BpttGradient, ::testing::Values(Direction::forward, Direction::reverse));

TEST(Blstm, ShapeAndComposition) {
    Rng rng(11);
    const auto p = BlstmParams::random(4, 2, rng);
    const Matrix xs = random_matrix(rng, 3, 4);
    const auto seq = blstm_forward(p, xs);
    ASSERT_EQ(seq.length(), 3u);
    ASSERT_EQ(seq.width(), 4u);
    const auto fwd = lstm_forward_sequence(p.forward, xs, Direction::forward);
    const auto rev = lstm_forward_sequence(p.backward, xs, Direction::reverse);
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t k = 0; k < 2; ++k) {
            EXPECT_EQ(seq.states()(j, k), fwd.states()(j, k));
            EXPECT_EQ(seq.states()(j, 2 + k), rev.states()(j, k));
        }
    }
    const auto bl = seq.backward_last();
    EXPECT_TRUE(std::equal(bl.begin(), bl.end(), seq.states().row(0).begin() + 2));
    const auto fl = seq.forward_last();
    EXPECT_TRUE(std::equal(fl.begin(), fl.end(), seq.states().row(2).begin()));
}

TEST(Blstm, BackwardLastOnlyForBidirectional) {
    Rng rng(12);
    const auto p = LstmParams::random(4, 2, rng);
    const auto seq = lstm_forward_sequence(p, random_matrix(rng, 3, 4));
    EXPECT_THROW((void)seq.backward_last(), ContractViolation);
}

TEST(Blstm, GradientMatchesFiniteDifferences) {
    Rng rng(13);
    auto p = BlstmParams::random(4, 3, rng, 0.7);
    ParamTensor xs("xs", random_matrix(rng, 5, 4));
    const Matrix weights = random_matrix(rng, 5, 6);
    auto loss = [&] { return dot(weights.data(), blstm_forward(p, xs.value).states().data()); };
    const auto seq = blstm_forward(p, xs.value);
    const Matrix gx = blstm_backward(p, seq, weights);
    auto tensors = p.tensors();
    auto analytic = grads_of(tensors);
    tensors.push_back(&xs);
    analytic.push_back(gx);
    const auto report = compare_gradients(tensors, analytic, loss);
    EXPECT_LT(report.max_rel_error, 1e-6) << report.worst;
}

TEST(ParamCount, ClosedForms) {
    EXPECT_EQ(lstm_param_count(300, 300), 721200u);
    EXPECT_EQ(blstm_param_count(300, 185), 719280u);
    Rng rng(1);
    EXPECT_EQ(LstmParams::random(300, 300, rng).count(), 721200u);
    EXPECT_EQ(BlstmParams::random(300, 185, rng).count(), 719280u);
    const double gap = (721200.0 - 719280.0) / 721200.0;
    EXPECT_LT(gap, 0.003);
}

TEST(ParamNames, PrefixedPerDirection) {
    Rng rng(1);
    const auto p = BlstmParams::random(2, 2, rng);
    EXPECT_EQ(p.forward.W.name, "blstm.fwd.W");
    EXPECT_EQ(p.backward.U.name, "blstm.bwd.U");
}
