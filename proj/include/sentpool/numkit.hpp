#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sentpool {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Plain value type.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<Vector>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    void fill(double v);

    // "RxC", used in error messages.
    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Random numbers
//
// xoshiro256** (Blackman & Vigna), state seeded by four successive outputs of
// splitmix64 starting from the user seed:
//
//   splitmix64: z = (s += 0x9e3779b97f4a7c15);
//               z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9;
//               z = (z ^ (z >> 27)) * 0x94d049bb133111eb;
//               return z ^ (z >> 31);
//
//   xoshiro256**: result = rotl(s1 * 5, 7) * 9; t = s1 << 17;
//                 s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t;
//                 s3 = rotl(s3, 45);
//
// Doubles use the top 53 bits: (x >> 11) * 2^-53, giving [0, 1).
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// Child seed for parallel task `task_id`: splitmix64 applied to
// seed ^ splitmix64-mixed task id. Stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t task_id) noexcept;

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes) noexcept;
std::uint64_t fnv1a(std::span<const double> values) noexcept;

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() noexcept;
    double uniform01() noexcept;
    double uniform(double lo, double hi) noexcept;
    // Unbiased integer in [0, n); n must be > 0.
    std::uint64_t below(std::uint64_t n) noexcept;

    template <class T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

// ---------------------------------------------------------------------------
// Initialization and parameters
// ---------------------------------------------------------------------------

inline constexpr double kInitStd = 0.08;
// Half-width of a uniform distribution whose standard deviation is kInitStd.
inline constexpr double kInitBound = kInitStd * std::numbers::sqrt3;
inline constexpr double kAdagradEpsilon = 1e-8;

// Entries i.i.d. U[-bound, +bound]. Throws InvalidShape on a zero dimension.
Matrix uniform_init(std::size_t rows, std::size_t cols, Rng& rng, double bound = kInitBound);

struct ParamTensor {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix accum;

    ParamTensor() = default;
    ParamTensor(std::string name, Matrix value);

    std::size_t count() const noexcept { return value.size(); }
    void zero_grad() noexcept { grad.fill(0.0); }
};

// accum += g^2; value -= lr * g / (sqrt(accum) + eps); grad = 0.
// Throws NumericFault (naming the tensor) before touching anything if the
// gradient holds a non-finite entry.
void adagrad_step(ParamTensor& p, double learning_rate, double epsilon = kAdagradEpsilon);

// ---------------------------------------------------------------------------
// Dense kernels. All shape checks throw InvalidShape naming both shapes.
// ---------------------------------------------------------------------------

Matrix zeros_like(const Matrix& m);
Vector matvec(const Matrix& a, std::span<const double> x);
// y += A x
void matvec_add(const Matrix& a, std::span<const double> x, std::span<double> y);
// y += A^T x
void matvec_transposed_add(const Matrix& a, std::span<const double> x, std::span<double> y);
// A += x y^T
void outer_add(Matrix& a, std::span<const double> x, std::span<const double> y);

Matrix add(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Vector add(std::span<const double> a, std::span<const double> b);
Vector hadamard(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const double> values) noexcept;

}  // namespace sentpool
