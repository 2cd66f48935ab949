#include "sentpool/numkit.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "sentpool/errors.hpp"

namespace sentpool {

namespace {

[[noreturn]] void shape_mismatch(const char* op, const std::string& a, const std::string& b) {
    throw InvalidShape(std::string(op) + ": shape mismatch " + a + " vs " + b);
}

std::string vec_shape(std::size_t n) { return "[" + std::to_string(n) + "]"; }

std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw InvalidShape("Matrix: " + std::to_string(data_.size()) + " values for shape " +
                           shape_string());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) {
            shape_mismatch("Matrix::from_rows", vec_shape(rows[r].size()), vec_shape(m.cols()));
        }
        std::memcpy(m.row(r).data(), rows[r].data(), m.cols() * sizeof(double));
    }
    return m;
}

void Matrix::fill(double v) {
    for (auto& x : data_) x = v;
}

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

// --- random ---------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t task_id) noexcept {
    std::uint64_t t = task_id;
    std::uint64_t s = seed ^ splitmix64(t);
    return splitmix64(s);
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a(std::span<const double> values) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

Rng::Rng(std::uint64_t seed) noexcept : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

std::uint64_t Rng::below(std::uint64_t n) noexcept {
    // Rejection on the top of the range keeps the draw unbiased.
    const std::uint64_t limit = -n % n;
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x >= limit) return x % n;
    }
}

// --- parameters -------------------------------------------------------------

Matrix uniform_init(std::size_t rows, std::size_t cols, Rng& rng, double bound) {
    if (rows == 0 || cols == 0) {
        throw InvalidShape("uniform_init: zero dimension in shape " + std::to_string(rows) + "x" +
                           std::to_string(cols));
    }
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = rng.uniform(-bound, bound);
    return m;
}

ParamTensor::ParamTensor(std::string n, Matrix v)
    : name(std::move(n)), value(std::move(v)), grad(zeros_like(value)), accum(zeros_like(value)) {}

void adagrad_step(ParamTensor& p, double learning_rate, double epsilon) {
    if (!(learning_rate >= 0.0) || !(epsilon > 0.0)) {
        throw InvalidConfig("adagrad_step: learning rate must be >= 0 and epsilon > 0");
    }
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        p.accum.rows() != p.value.rows() || p.accum.cols() != p.value.cols()) {
        shape_mismatch("adagrad_step", p.value.shape_string(), p.grad.shape_string());
    }
    if (!all_finite(p.grad.data())) {
        throw NumericFault(p.name, "adagrad_step: non-finite gradient in tensor '" + p.name + "'");
    }
    auto value = p.value.data();
    auto grad = p.grad.data();
    auto accum = p.accum.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
        const double g = grad[i];
        accum[i] += g * g;
        value[i] -= learning_rate * g / (std::sqrt(accum[i]) + epsilon);
        grad[i] = 0.0;
    }
}

// --- kernels ----------------------------------------------------------------

Matrix zeros_like(const Matrix& m) { return Matrix(m.rows(), m.cols()); }

Vector matvec(const Matrix& a, std::span<const double> x) {
    Vector y(a.rows(), 0.0);
    matvec_add(a, x, y);
    return y;
}

void matvec_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
    if (x.size() != a.cols() || y.size() != a.rows()) {
        shape_mismatch("matvec", a.shape_string(), vec_shape(x.size()) + "->" + vec_shape(y.size()));
    }
    const std::size_t cols = a.cols();
    const double* ad = a.data().data();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* row = ad + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

void matvec_transposed_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
    if (x.size() != a.rows() || y.size() != a.cols()) {
        shape_mismatch("matvec_transposed", a.shape_string(),
                       vec_shape(x.size()) + "->" + vec_shape(y.size()));
    }
    const std::size_t cols = a.cols();
    const double* ad = a.data().data();
    double* yd = y.data();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        const double* row = ad + r * cols;
        for (std::size_t c = 0; c < cols; ++c) yd[c] += row[c] * xr;
    }
}

void outer_add(Matrix& a, std::span<const double> x, std::span<const double> y) {
    if (x.size() != a.rows() || y.size() != a.cols()) {
        shape_mismatch("outer_add", a.shape_string(), vec_shape(x.size()) + "x" + vec_shape(y.size()));
    }
    const std::size_t cols = a.cols();
    double* ad = a.data().data();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        double* row = ad + r * cols;
        for (std::size_t c = 0; c < cols; ++c) row[c] += xr * y[c];
    }
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        shape_mismatch("add", a.shape_string(), b.shape_string());
    }
    Matrix out = a;
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        shape_mismatch("hadamard", a.shape_string(), b.shape_string());
    }
    Matrix out = a;
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bd[i];
    return out;
}

Vector add(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) shape_mismatch("add", vec_shape(a.size()), vec_shape(b.size()));
    Vector out(a.begin(), a.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Vector hadamard(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) shape_mismatch("hadamard", vec_shape(a.size()), vec_shape(b.size()));
    Vector out(a.begin(), a.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

bool all_finite(std::span<const double> values) noexcept {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace sentpool
