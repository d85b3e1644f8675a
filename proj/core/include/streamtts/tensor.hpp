#pragma once

#include <cstddef>
#include <cstring>
#include <span>
#include <vector>

namespace streamtts {

using Vec = std::vector<float>;

/// Row-major 2-D float matrix. Sequences of frames are stored one frame per row.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c, float fill = 0.0f) : rows(r), cols(c), data(r * c, fill) {}

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    float& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    float operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<float> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const float> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    /// Rows [first, first + count) as a new tensor.
    Tensor2 slice_rows(std::size_t first, std::size_t count) const;

    /// Appends all rows of `other`; column counts must match.
    void append_rows(const Tensor2& other);
};

/// Byte-level equality. Distinguishes -0.0 from +0.0 and compares NaN payloads.
inline bool bit_equal(std::span<const float> a, std::span<const float> b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

inline bool bit_equal(const Tensor2& a, const Tensor2& b) {
    return a.rows == b.rows && a.cols == b.cols && bit_equal(std::span<const float>(a.data), std::span<const float>(b.data));
}

bool all_finite(std::span<const float> values);

/// Bitwise-distinct rows in first-seen order; row t of the source equals
/// unique.row(index[t]).
struct DistinctRows {
    Tensor2 unique;
    std::vector<std::size_t> index;
};
DistinctRows distinct_rows(const Tensor2& t);

}  // namespace streamtts
