#include "sentpool/rnn_core.hpp"

#include <atomic>
#include <cmath>

#include "sentpool/errors.hpp"

namespace sentpool {

namespace {

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::atomic<std::uint64_t> next_sequence_id{1};

void check_len(const char* op, std::size_t got, std::size_t want) {
    if (got != want) {
        throw InvalidShape(std::string(op) + ": length " + std::to_string(got) + " vs expected " +
                           std::to_string(want));
    }
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim, const std::string& prefix) {
    if (input_dim == 0 || hidden_dim == 0) throw InvalidShape("LstmParams: zero dimension");
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.W = ParamTensor(prefix + ".W", Matrix(kGateCount * hidden_dim, input_dim));
    p.U = ParamTensor(prefix + ".U", Matrix(kGateCount * hidden_dim, hidden_dim));
    p.b = ParamTensor(prefix + ".b", Matrix(kGateCount * hidden_dim, 1));
    return p;
}

LstmParams LstmParams::random(std::size_t input_dim, std::size_t hidden_dim, Rng& rng, double bound,
                              const std::string& prefix) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.W = ParamTensor(prefix + ".W", uniform_init(kGateCount * hidden_dim, input_dim, rng, bound));
    p.U = ParamTensor(prefix + ".U", uniform_init(kGateCount * hidden_dim, hidden_dim, rng, bound));
    p.b = ParamTensor(prefix + ".b", uniform_init(kGateCount * hidden_dim, 1, rng, bound));
    return p;
}

BlstmParams BlstmParams::random(std::size_t input_dim, std::size_t hidden_dim, Rng& rng, double bound) {
    BlstmParams p;
    p.forward = LstmParams::random(input_dim, hidden_dim, rng, bound, "blstm.fwd");
    p.backward = LstmParams::random(input_dim, hidden_dim, rng, bound, "blstm.bwd");
    return p;
}

std::vector<ParamTensor*> BlstmParams::tensors() {
    auto out = forward.tensors();
    for (auto* t : backward.tensors()) out.push_back(t);
    return out;
}

std::vector<const ParamTensor*> BlstmParams::tensors() const {
    auto out = forward.tensors();
    for (auto* t : backward.tensors()) out.push_back(t);
    return out;
}

// --- cell ---------------------------------------------------------------------

CellOutput lstm_cell_forward(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
                             std::span<const double> c_prev) {
    const std::size_t h = p.hidden_dim;
    check_len("lstm_cell_forward(x)", x.size(), p.input_dim);
    check_len("lstm_cell_forward(h_prev)", h_prev.size(), h);
    check_len("lstm_cell_forward(c_prev)", c_prev.size(), h);

    CellOutput out;
    CellCache& cache = out.cache;
    cache.x.assign(x.begin(), x.end());
    cache.h_prev.assign(h_prev.begin(), h_prev.end());
    cache.c_prev.assign(c_prev.begin(), c_prev.end());

    Vector z(p.b.value.storage());
    matvec_add(p.W.value, x, z);
    matvec_add(p.U.value, h_prev, z);

    cache.gates.resize(kGateCount * h);
    for (std::size_t k = 0; k < 3 * h; ++k) cache.gates[k] = sigmoid(z[k]);
    for (std::size_t k = 3 * h; k < 4 * h; ++k) cache.gates[k] = std::tanh(z[k]);

    cache.c.resize(h);
    cache.tanh_c.resize(h);
    out.h.resize(h);
    const double* i = cache.gates.data();
    const double* f = i + h;
    const double* o = f + h;
    const double* g = o + h;
    for (std::size_t k = 0; k < h; ++k) {
        cache.c[k] = f[k] * c_prev[k] + i[k] * g[k];
        cache.tanh_c[k] = std::tanh(cache.c[k]);
        out.h[k] = o[k] * cache.tanh_c[k];
    }
    out.c = cache.c;
    return out;
}

CellGrads lstm_cell_backward(LstmParams& p, const CellCache& cache, std::span<const double> dh,
                             std::span<const double> dc_next) {
    const std::size_t h = p.hidden_dim;
    check_len("lstm_cell_backward(dh)", dh.size(), h);
    check_len("lstm_cell_backward(dc)", dc_next.size(), h);
    check_len("lstm_cell_backward(cache)", cache.gates.size(), kGateCount * h);

    const double* i = cache.gates.data();
    const double* f = i + h;
    const double* o = f + h;
    const double* g = o + h;

    CellGrads out;
    out.dc_prev.resize(h);
    Vector dz(kGateCount * h);
    for (std::size_t k = 0; k < h; ++k) {
        const double tc = cache.tanh_c[k];
        const double dc = dc_next[k] + dh[k] * o[k] * (1.0 - tc * tc);
        dz[k] = dc * g[k] * i[k] * (1.0 - i[k]);
        dz[h + k] = dc * cache.c_prev[k] * f[k] * (1.0 - f[k]);
        dz[2 * h + k] = dh[k] * tc * o[k] * (1.0 - o[k]);
        dz[3 * h + k] = dc * i[k] * (1.0 - g[k] * g[k]);
        out.dc_prev[k] = dc * f[k];
    }

    outer_add(p.W.grad, dz, cache.x);
    outer_add(p.U.grad, dz, cache.h_prev);
    auto db = p.b.grad.data();
    for (std::size_t k = 0; k < dz.size(); ++k) db[k] += dz[k];

    out.dx.assign(p.input_dim, 0.0);
    matvec_transposed_add(p.W.value, dz, out.dx);
    out.dh_prev.assign(h, 0.0);
    matvec_transposed_add(p.U.value, dz, out.dh_prev);
    return out;
}

// --- sequences ------------------------------------------------------------------

HiddenSequence::HiddenSequence(Body body, std::size_t hidden_dim, Matrix states, std::vector<LstmTrace> traces)
    : body_(body),
      hidden_dim_(hidden_dim),
      states_(std::move(states)),
      traces_(std::move(traces)),
      id_(next_sequence_id.fetch_add(1, std::memory_order_relaxed)) {
    const std::size_t want = body == Body::blstm ? 2 * hidden_dim : hidden_dim;
    if (states_.rows() == 0) throw EmptyInput("HiddenSequence: empty sequence");
    if (states_.cols() != want) {
        throw InvalidShape("HiddenSequence: width " + std::to_string(states_.cols()) + " vs expected " +
                           std::to_string(want));
    }
}

std::span<const double> HiddenSequence::forward_last() const {
    return states_.row(length() - 1).first(hidden_dim_);
}

std::span<const double> HiddenSequence::backward_last() const {
    if (body_ != Body::blstm) throw ContractViolation("backward_last: sequence is unidirectional");
    return states_.row(0).subspan(hidden_dim_, hidden_dim_);
}

namespace {

LstmTrace run_direction(const LstmParams& p, const Matrix& xs, Direction direction, Matrix& states,
                        std::size_t col_offset) {
    const std::size_t m = xs.rows();
    const std::size_t h = p.hidden_dim;
    LstmTrace trace;
    trace.direction = direction;
    trace.steps.reserve(m);
    Vector h_prev(h, 0.0);
    Vector c_prev(h, 0.0);
    for (std::size_t t = 0; t < m; ++t) {
        const std::size_t pos = direction == Direction::forward ? t : m - 1 - t;
        CellOutput step = lstm_cell_forward(p, xs.row(pos), h_prev, c_prev);
        std::copy(step.h.begin(), step.h.end(), states.row(pos).begin() + static_cast<std::ptrdiff_t>(col_offset));
        h_prev = std::move(step.h);
        c_prev = std::move(step.c);
        trace.steps.push_back(std::move(step.cache));
    }
    return trace;
}

void check_inputs(const char* op, const LstmParams& p, const Matrix& xs) {
    if (xs.rows() == 0) throw EmptyInput(std::string(op) + ": empty input sequence");
    if (xs.cols() != p.input_dim) {
        throw InvalidShape(std::string(op) + ": input width " + std::to_string(xs.cols()) + " vs " +
                           std::to_string(p.input_dim));
    }
}

}  // namespace

HiddenSequence lstm_forward_sequence(const LstmParams& p, const Matrix& xs, Direction direction) {
    check_inputs("lstm_forward_sequence", p, xs);
    Matrix states(xs.rows(), p.hidden_dim);
    std::vector<LstmTrace> traces;
    traces.push_back(run_direction(p, xs, direction, states, 0));
    return HiddenSequence(Body::lstm, p.hidden_dim, std::move(states), std::move(traces));
}

HiddenSequence blstm_forward(const BlstmParams& p, const Matrix& xs) {
    check_inputs("blstm_forward", p.forward, xs);
    if (p.backward.input_dim != p.forward.input_dim || p.backward.hidden_dim != p.forward.hidden_dim) {
        throw InvalidShape("blstm_forward: direction shapes differ");
    }
    const std::size_t h = p.forward.hidden_dim;
    Matrix states(xs.rows(), 2 * h);
    std::vector<LstmTrace> traces;
    traces.push_back(run_direction(p.forward, xs, Direction::forward, states, 0));
    traces.push_back(run_direction(p.backward, xs, Direction::reverse, states, h));
    return HiddenSequence(Body::blstm, h, std::move(states), std::move(traces));
}

Matrix lstm_backward_sequence(LstmParams& p, const LstmTrace& trace, const Matrix& grad_states) {
    const std::size_t m = trace.steps.size();
    const std::size_t h = p.hidden_dim;
    if (grad_states.rows() != m || grad_states.cols() != h) {
        throw InvalidShape("lstm_backward_sequence: gradient shape " + grad_states.shape_string() +
                           " vs states " + std::to_string(m) + "x" + std::to_string(h));
    }
    Matrix grad_xs(m, p.input_dim);
    Vector dh(h);
    Vector dh_next(h, 0.0);
    Vector dc_next(h, 0.0);
    for (std::size_t t = m; t-- > 0;) {
        const std::size_t pos = trace.direction == Direction::forward ? t : m - 1 - t;
        const auto g = grad_states.row(pos);
        for (std::size_t k = 0; k < h; ++k) dh[k] = g[k] + dh_next[k];
        CellGrads cg = lstm_cell_backward(p, trace.steps[t], dh, dc_next);
        std::copy(cg.dx.begin(), cg.dx.end(), grad_xs.row(pos).begin());
        dh_next = std::move(cg.dh_prev);
        dc_next = std::move(cg.dc_prev);
    }
    return grad_xs;
}

Matrix blstm_backward(BlstmParams& p, const HiddenSequence& seq, const Matrix& grad_states) {
    if (seq.body() != Body::blstm || seq.traces().size() != 2) {
        throw ContractViolation("blstm_backward: sequence was not produced by blstm_forward");
    }
    const std::size_t m = seq.length();
    const std::size_t h = seq.hidden_dim();
    if (grad_states.rows() != m || grad_states.cols() != 2 * h) {
        throw InvalidShape("blstm_backward: gradient shape " + grad_states.shape_string() + " vs states " +
                           seq.states().shape_string());
    }
    Matrix fwd(m, h);
    Matrix bwd(m, h);
    for (std::size_t j = 0; j < m; ++j) {
        const auto row = grad_states.row(j);
        std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(h), fwd.row(j).begin());
        std::copy(row.begin() + static_cast<std::ptrdiff_t>(h), row.end(), bwd.row(j).begin());
    }
    Matrix gx = lstm_backward_sequence(p.forward, seq.traces()[0], fwd);
    const Matrix gx_rev = lstm_backward_sequence(p.backward, seq.traces()[1], bwd);
    auto a = gx.data();
    auto b = gx_rev.data();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return gx;
}

}  // namespace sentpool
