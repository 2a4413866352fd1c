#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sinoplace {

// Error taxonomy shared by all modules. Every failure carries a message;
// catch sites that only need the category catch the subtype.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : Error {
    using Error::Error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct OrderError : Error {
    using Error::Error;
};
struct RangeError : Error {
    using Error::Error;
};
struct IndexError : Error {
    using Error::Error;
};
struct ParameterError : Error {
    using Error::Error;
};
struct CorruptionError : Error {
    using Error::Error;
};
struct NoCandidateError : Error {
    using Error::Error;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle to [0, 2*pi).
inline double wrap_two_pi(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;
    return a;
}

/// Wraps an angle to (-pi, pi].
inline double wrap_pi(double a) {
    a = std::fmod(a + kPi, kTwoPi);
    if (a <= 0.0) a += kTwoPi;
    return a - kPi;
}

/// Dense row-major matrix. The only container the pipeline needs; rows and
/// columns carry whatever axis semantics the owning type documents.
template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    bool operator==(const Mat&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

}  // namespace sinoplace
