#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sentpool/numkit.hpp"

namespace sentpool {

enum class Direction { forward, reverse };
enum class Body { lstm, blstm };

inline constexpr std::size_t kGateCount = 4;

// Forget-gate LSTM without peepholes:
//   i = sigm(W_i x + U_i h + b_i)    f = sigm(W_f x + U_f h + b_f)
//   o = sigm(W_o x + U_o h + b_o)    g = tanh(W_g x + U_g h + b_g)
//   c' = f * c + i * g               h' = o * tanh(c')
//
// The four gates are stacked row-wise in one matrix per kind, in the order
// input, forget, output, candidate. Block k of W occupies rows
// [k*hidden, (k+1)*hidden).
struct LstmParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    ParamTensor W;  // 4h x input_dim
    ParamTensor U;  // 4h x h
    ParamTensor b;  // 4h x 1

    static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim, const std::string& prefix = "lstm");
    static LstmParams random(std::size_t input_dim, std::size_t hidden_dim, Rng& rng,
                             double bound = kInitBound, const std::string& prefix = "lstm");

    std::size_t count() const noexcept { return W.count() + U.count() + b.count(); }
    std::vector<ParamTensor*> tensors() { return {&W, &U, &b}; }
    std::vector<const ParamTensor*> tensors() const { return {&W, &U, &b}; }
};

struct BlstmParams {
    LstmParams forward;
    LstmParams backward;

    static BlstmParams random(std::size_t input_dim, std::size_t hidden_dim, Rng& rng,
                              double bound = kInitBound);

    std::size_t count() const noexcept { return forward.count() + backward.count(); }
    std::vector<ParamTensor*> tensors();
    std::vector<const ParamTensor*> tensors() const;
};

// 4 * (d_in * d_h + d_h^2 + d_h)
constexpr std::size_t lstm_param_count(std::size_t input_dim, std::size_t hidden_dim) noexcept {
    return kGateCount * (input_dim * hidden_dim + hidden_dim * hidden_dim + hidden_dim);
}

constexpr std::size_t blstm_param_count(std::size_t input_dim, std::size_t hidden_dim) noexcept {
    return 2 * lstm_param_count(input_dim, hidden_dim);
}

struct CellCache {
    Vector x;
    Vector h_prev;
    Vector c_prev;
    Vector gates;  // activated i, f, o, g stacked (4h)
    Vector c;
    Vector tanh_c;
};

struct CellOutput {
    Vector h;
    Vector c;
    CellCache cache;
};

CellOutput lstm_cell_forward(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
                             std::span<const double> c_prev);

struct CellGrads {
    Vector dx;
    Vector dh_prev;
    Vector dc_prev;
};

// Accumulates into p.W.grad, p.U.grad, p.b.grad. `dh` is dL/dh_t, `dc` the
// gradient flowing into c_t from the following step.
CellGrads lstm_cell_backward(LstmParams& p, const CellCache& cache, std::span<const double> dh,
                             std::span<const double> dc);

// Forward cache of one direction; steps are stored in processing order.
struct LstmTrace {
    Direction direction = Direction::forward;
    std::vector<CellCache> steps;
};

// Per-position hidden states h'_1..h'_m with the forward caches needed for
// BPTT. Rows are aligned to input positions for both directions. For a
// bidirectional body, row j = [forward_j ; reverse_j].
class HiddenSequence {
public:
    HiddenSequence(Body body, std::size_t hidden_dim, Matrix states, std::vector<LstmTrace> traces);

    Body body() const noexcept { return body_; }
    std::size_t length() const noexcept { return states_.rows(); }
    std::size_t width() const noexcept { return states_.cols(); }
    std::size_t hidden_dim() const noexcept { return hidden_dim_; }
    const Matrix& states() const noexcept { return states_; }
    const std::vector<LstmTrace>& traces() const noexcept { return traces_; }
    // Unique per constructed sequence; features remember where they came from.
    std::uint64_t id() const noexcept { return id_; }

    // Forward-direction state at the last position.
    std::span<const double> forward_last() const;
    // Reverse-direction state after consuming the whole sentence, which sits
    // at position 0. Bidirectional bodies only.
    std::span<const double> backward_last() const;

private:
    Body body_;
    std::size_t hidden_dim_;
    Matrix states_;
    std::vector<LstmTrace> traces_;
    std::uint64_t id_;
};

// h0 = c0 = 0. xs is m x input_dim; m = 0 throws EmptyInput.
HiddenSequence lstm_forward_sequence(const LstmParams& p, const Matrix& xs,
                                     Direction direction = Direction::forward);
HiddenSequence blstm_forward(const BlstmParams& p, const Matrix& xs);

// Full BPTT for one direction. grad_states is m x hidden_dim, aligned to input
// positions like the forward output. Returns dL/dxs (m x input_dim).
Matrix lstm_backward_sequence(LstmParams& p, const LstmTrace& trace, const Matrix& grad_states);

// grad_states is m x 2h; the two halves are routed to their directions and
// the input gradients summed.
Matrix blstm_backward(BlstmParams& p, const HiddenSequence& seq, const Matrix& grad_states);

}  // namespace sentpool
