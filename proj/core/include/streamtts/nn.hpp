#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "streamtts/tensor.hpp"

// Deterministic float32 kernels. Every reduction goes through dot(), whose
// accumulation order depends only on the vector length, so identical inputs
// give identical bits no matter which caller or call site is involved.

namespace streamtts {

/// y = W x + b. weight is out_dim x in_dim.
struct LinearParams {
    Tensor2 weight;
    Vec bias;

    std::size_t in_dim() const { return weight.cols; }
    std::size_t out_dim() const { return weight.rows; }
    void validate(std::string_view name) const;
};

/// Gate rows are stacked [update z; reset r; candidate n], each hidden_dim tall.
struct GruParams {
    Tensor2 w_ih;  // 3H x in
    Tensor2 w_hh;  // 3H x H
    Vec bias;      // 3H

    std::size_t input_dim() const { return w_ih.cols; }
    std::size_t hidden_dim() const { return w_hh.cols; }
    void validate(std::string_view name) const;
};

/// Gate rows are stacked [input i; forget f; cell g; output o].
struct LstmParams {
    Tensor2 w_ih;  // 4H x in
    Tensor2 w_hh;  // 4H x H
    Vec bias;      // 4H

    std::size_t input_dim() const { return w_ih.cols; }
    std::size_t hidden_dim() const { return w_hh.cols; }
    void validate(std::string_view name) const;
};

/// weight row o holds kernel taps back to back: weight(o, tap * in_channels + c).
struct Conv1dParams {
    Tensor2 weight;  // out_channels x (kernel_size * in_channels)
    Vec bias;        // out_channels
    std::size_t kernel_size = 1;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;

    std::size_t half_width() const { return (kernel_size - 1) / 2; }
    void validate(std::string_view name) const;
};

struct EmbeddingTable {
    Tensor2 table;  // vocab_size x dim

    std::size_t vocab_size() const { return table.rows; }
    std::size_t dim() const { return table.cols; }
};

enum class Activation { Linear, Tanh, Relu };

float dot(std::span<const float> a, std::span<const float> b);

Vec linear_forward(std::span<const float> x, const LinearParams& p);

/// out(t, o) = dot(weight.row(o), inputs.row(t)).
Tensor2 project_rows(const Tensor2& inputs, const Tensor2& weight);
/// out = weight x without bias; out[o] equals dot(weight.row(o), x).
void matvec(const Tensor2& weight, std::span<const float> x, std::span<float> out);
/// linear_forward applied to every row; bit-identical to the per-row call.
Tensor2 linear_forward_rows(const Tensor2& inputs, const LinearParams& p);

float sigmoid(float x);
Vec softmax(std::span<const float> logits);
void apply_activation(std::span<float> values, Activation act);

Vec gru_cell_step(std::span<const float> x, std::span<const float> h, const GruParams& p);
/// Same step with the 3H input-side products (no bias) already computed.
Vec gru_cell_step_projected(std::span<const float> input_proj, std::span<const float> h, const GruParams& p);

struct LstmState {
    Vec h;
    Vec c;
};
LstmState lstm_cell_step(std::span<const float> x, std::span<const float> h, std::span<const float> c,
                         const LstmParams& p);

/// "Same" convolution over a T x in_channels sequence with zero padding of
/// (kernel_size - 1) / 2 frames on each side. Output is T x out_channels.
Tensor2 conv1d_forward(const Tensor2& seq, const Conv1dParams& p);

/// Convolution restricted to part of a window.
///
/// The window spans positions [0, window_len); positions outside it read as
/// zeros. `input` holds the rows for window positions
/// [input_first, input_first + input.rows). Returns rows for output positions
/// [out_first, out_last). Every tap that falls inside the window must be
/// covered by `input`. For a given output position the arithmetic only depends
/// on which of its taps are inside the window, which is what lets a short
/// window reproduce a slice of a full-sequence convolution exactly.
Tensor2 conv1d_window(const Tensor2& input, std::ptrdiff_t input_first, std::ptrdiff_t window_len,
                      std::ptrdiff_t out_first, std::ptrdiff_t out_last, const Conv1dParams& p);

/// Throws InputError naming the position of the first id outside the table.
Tensor2 embedding_lookup(std::span<const std::int32_t> ids, const EmbeddingTable& table);

}  // namespace streamtts
