#include "streamtts/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

#include "streamtts/errors.hpp"

namespace streamtts {

Tensor2 Tensor2::slice_rows(std::size_t first, std::size_t count) const {
    if (first + count > rows) throw std::out_of_range("Tensor2::slice_rows past end");
    Tensor2 out(count, cols);
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(first * cols), count * cols, out.data.begin());
    return out;
}

void Tensor2::append_rows(const Tensor2& other) {
    if (other.rows == 0) return;
    if (rows == 0 && cols == 0) cols = other.cols;
    if (other.cols != cols) throw ConfigError("append_rows: column mismatch");
    data.insert(data.end(), other.data.begin(), other.data.end());
    rows += other.rows;
}

bool all_finite(std::span<const float> values) {
    return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

DistinctRows distinct_rows(const Tensor2& t) {
    DistinctRows out;
    out.unique.cols = t.cols;
    out.index.reserve(t.rows);
    std::unordered_map<std::string_view, std::size_t> seen;
    for (std::size_t r = 0; r < t.rows; ++r) {
        const auto bytes = t.row(r);
        const std::string_view key(reinterpret_cast<const char*>(bytes.data()), bytes.size_bytes());
        auto [it, inserted] = seen.emplace(key, out.unique.rows);
        if (inserted) {
            out.unique.data.insert(out.unique.data.end(), bytes.begin(), bytes.end());
            ++out.unique.rows;
        }
        out.index.push_back(it->second);
    }
    return out;
}

namespace {

[[noreturn]] void shape_error(std::string_view name, const std::string& what) {
    throw ConfigError(std::string(name) + ": " + what);
}

void check_rows(std::string_view name, const Tensor2& t, std::size_t rows, std::size_t cols, const char* field) {
    if (t.rows != rows || t.cols != cols || t.data.size() != rows * cols) {
        shape_error(name, std::string(field) + " expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                              ", got " + std::to_string(t.rows) + "x" + std::to_string(t.cols));
    }
}

void check_len(std::string_view name, std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        shape_error(name, std::string(what) + " length " + std::to_string(got) + ", expected " + std::to_string(want));
    }
}

}  // namespace

void LinearParams::validate(std::string_view name) const {
    check_rows(name, weight, weight.rows, weight.cols, "weight");
    check_len(name, bias.size(), out_dim(), "bias");
}

void GruParams::validate(std::string_view name) const {
    const std::size_t h = hidden_dim();
    check_rows(name, w_hh, 3 * h, h, "w_hh");
    check_rows(name, w_ih, 3 * h, w_ih.cols, "w_ih");
    check_len(name, bias.size(), 3 * h, "bias");
}

void LstmParams::validate(std::string_view name) const {
    const std::size_t h = hidden_dim();
    check_rows(name, w_hh, 4 * h, h, "w_hh");
    check_rows(name, w_ih, 4 * h, w_ih.cols, "w_ih");
    check_len(name, bias.size(), 4 * h, "bias");
}

void Conv1dParams::validate(std::string_view name) const {
    if (kernel_size == 0 || kernel_size % 2 == 0) {
        shape_error(name, "kernel_size must be odd, got " + std::to_string(kernel_size));
    }
    check_rows(name, weight, out_channels, kernel_size * in_channels, "weight");
    check_len(name, bias.size(), out_channels, "bias");
}

namespace {

// 16 independent lanes, folded in a fixed tree. The compiler vectorizes the
// lane loop without reassociating anything.
inline float dot_kernel(const float* x, const float* y, std::size_t n) {
    constexpr std::size_t kLanes = 16;
    float acc[kLanes] = {};
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        for (std::size_t j = 0; j < kLanes; ++j) acc[j] += x[i + j] * y[i + j];
    }
    float tail = 0.0f;
    for (; i < n; ++i) tail += x[i] * y[i];
    // Same tree as halving widths 8, 4, 2, 1, spelled out so it stays in registers.
    for (std::size_t j = 0; j < 8; ++j) acc[j] = acc[j] + acc[j + 8];
    for (std::size_t j = 0; j < 4; ++j) acc[j] = acc[j] + acc[j + 4];
    acc[0] = acc[0] + acc[2];
    acc[1] = acc[1] + acc[3];
    return (acc[0] + acc[1]) + tail;
}

}  // namespace

float dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw ConfigError("dot: length mismatch");
    return dot_kernel(a.data(), b.data(), a.size());
}

void matvec(const Tensor2& weight, std::span<const float> x, std::span<float> out) {
    if (x.size() != weight.cols || out.size() != weight.rows) throw ConfigError("matvec: dimension mismatch");
    const float* w = weight.data.data();
    for (std::size_t o = 0; o < weight.rows; ++o) out[o] = dot_kernel(w + o * weight.cols, x.data(), weight.cols);
}

Tensor2 project_rows(const Tensor2& inputs, const Tensor2& weight) {
    if (inputs.cols != weight.cols) {
        throw ConfigError("project_rows: input width " + std::to_string(inputs.cols) + ", expected " +
                          std::to_string(weight.cols));
    }
    Tensor2 out(inputs.rows, weight.rows);
    for (std::size_t t = 0; t < inputs.rows; ++t) matvec(weight, inputs.row(t), out.row(t));
    return out;
}

Tensor2 linear_forward_rows(const Tensor2& inputs, const LinearParams& p) {
    Tensor2 out = project_rows(inputs, p.weight);
    for (std::size_t t = 0; t < out.rows; ++t) {
        for (std::size_t o = 0; o < out.cols; ++o) out(t, o) = out(t, o) + p.bias[o];
    }
    return out;
}

Vec linear_forward(std::span<const float> x, const LinearParams& p) {
    if (x.size() != p.in_dim()) {
        throw ConfigError("linear_forward: input length " + std::to_string(x.size()) + ", expected " +
                          std::to_string(p.in_dim()));
    }
    Vec y(p.out_dim());
    for (std::size_t o = 0; o < y.size(); ++o) y[o] = dot(p.weight.row(o), x) + p.bias[o];
    return y;
}

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

Vec softmax(std::span<const float> logits) {
    if (logits.empty()) throw ConfigError("softmax: empty input");
    const float peak = *std::max_element(logits.begin(), logits.end());
    Vec out(logits.size());
    float total = 0.0f;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (float& v : out) v /= total;
    return out;
}

void apply_activation(std::span<float> values, Activation act) {
    switch (act) {
        case Activation::Linear:
            return;
        case Activation::Tanh:
            for (float& v : values) v = std::tanh(v);
            return;
        case Activation::Relu:
            for (float& v : values) v = std::max(v, 0.0f);
            return;
    }
}

Vec gru_cell_step(std::span<const float> x, std::span<const float> h, const GruParams& p) {
    const std::size_t hd = p.hidden_dim();
    if (x.size() != p.input_dim() || h.size() != hd) throw ConfigError("gru_cell_step: dimension mismatch");
    Vec out(hd);
    for (std::size_t u = 0; u < hd; ++u) {
        const float z = sigmoid(dot(p.w_ih.row(u), x) + dot(p.w_hh.row(u), h) + p.bias[u]);
        const float r = sigmoid(dot(p.w_ih.row(hd + u), x) + dot(p.w_hh.row(hd + u), h) + p.bias[hd + u]);
        const float n =
            std::tanh(dot(p.w_ih.row(2 * hd + u), x) + r * dot(p.w_hh.row(2 * hd + u), h) + p.bias[2 * hd + u]);
        out[u] = (1.0f - z) * n + z * h[u];
    }
    return out;
}

Vec gru_cell_step_projected(std::span<const float> input_proj, std::span<const float> h, const GruParams& p) {
    const std::size_t hd = p.hidden_dim();
    if (input_proj.size() != 3 * hd || h.size() != hd) throw ConfigError("gru_cell_step: dimension mismatch");
    Vec rec(3 * hd);
    matvec(p.w_hh, h, rec);
    Vec out(hd);
    for (std::size_t u = 0; u < hd; ++u) {
        const float z = sigmoid(input_proj[u] + rec[u] + p.bias[u]);
        const float r = sigmoid(input_proj[hd + u] + rec[hd + u] + p.bias[hd + u]);
        const float n = std::tanh(input_proj[2 * hd + u] + r * rec[2 * hd + u] + p.bias[2 * hd + u]);
        out[u] = (1.0f - z) * n + z * h[u];
    }
    return out;
}

LstmState lstm_cell_step(std::span<const float> x, std::span<const float> h, std::span<const float> c,
                         const LstmParams& p) {
    const std::size_t hd = p.hidden_dim();
    if (x.size() != p.input_dim() || h.size() != hd || c.size() != hd) {
        throw ConfigError("lstm_cell_step: dimension mismatch");
    }
    auto gate = [&](std::size_t row) { return dot(p.w_ih.row(row), x) + dot(p.w_hh.row(row), h) + p.bias[row]; };
    LstmState next{Vec(hd), Vec(hd)};
    for (std::size_t u = 0; u < hd; ++u) {
        const float i = sigmoid(gate(u));
        const float f = sigmoid(gate(hd + u));
        const float g = std::tanh(gate(2 * hd + u));
        const float o = sigmoid(gate(3 * hd + u));
        next.c[u] = f * c[u] + i * g;
        next.h[u] = o * std::tanh(next.c[u]);
    }
    return next;
}

Tensor2 conv1d_window(const Tensor2& input, std::ptrdiff_t input_first, std::ptrdiff_t window_len,
                      std::ptrdiff_t out_first, std::ptrdiff_t out_last, const Conv1dParams& p) {
    if (input.cols != p.in_channels) {
        throw ConfigError("conv1d: input has " + std::to_string(input.cols) + " channels, expected " +
                          std::to_string(p.in_channels));
    }
    if (out_first < 0 || out_last > window_len || out_first > out_last) {
        throw std::logic_error("conv1d_window: output range outside window");
    }
    const auto k = static_cast<std::ptrdiff_t>(p.kernel_size);
    const auto half = static_cast<std::ptrdiff_t>(p.half_width());
    const auto cin = static_cast<std::ptrdiff_t>(p.in_channels);
    const auto input_last = input_first + static_cast<std::ptrdiff_t>(input.rows);

    Tensor2 out(static_cast<std::size_t>(out_last - out_first), p.out_channels);
    for (std::ptrdiff_t t = out_first; t < out_last; ++t) {
        const std::ptrdiff_t tap_lo = std::max<std::ptrdiff_t>(0, half - t);
        const std::ptrdiff_t tap_hi = std::min<std::ptrdiff_t>(k, window_len - t + half);
        const std::ptrdiff_t pos_lo = t - half + tap_lo;
        const std::ptrdiff_t pos_hi = t - half + tap_hi;
        if (pos_lo < input_first || pos_hi > input_last) {
            throw std::logic_error("conv1d_window: input does not cover the taps of output " + std::to_string(t));
        }
        const auto len = static_cast<std::size_t>((tap_hi - tap_lo) * cin);
        std::span<const float> in_taps(input.data.data() + (pos_lo - input_first) * cin, len);
        float* dst = out.row(static_cast<std::size_t>(t - out_first)).data();
        for (std::size_t o = 0; o < p.out_channels; ++o) {
            std::span<const float> w_taps = p.weight.row(o).subspan(static_cast<std::size_t>(tap_lo * cin), len);
            dst[o] = dot(w_taps, in_taps) + p.bias[o];
        }
    }
    return out;
}

Tensor2 conv1d_forward(const Tensor2& seq, const Conv1dParams& p) {
    const auto t = static_cast<std::ptrdiff_t>(seq.rows);
    return conv1d_window(seq, 0, t, 0, t, p);
}

Tensor2 embedding_lookup(std::span<const std::int32_t> ids, const EmbeddingTable& table) {
    Tensor2 out(ids.size(), table.dim());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::int32_t id = ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= table.vocab_size()) {
            throw InputError("symbol id " + std::to_string(id) + " at position " + std::to_string(i) +
                             " is outside the vocabulary of " + std::to_string(table.vocab_size()));
        }
        auto src = table.table.row(static_cast<std::size_t>(id));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace streamtts
