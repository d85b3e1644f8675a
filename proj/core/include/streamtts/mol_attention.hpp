#pragma once

#include <cstddef>
#include <span>

#include "streamtts/nn.hpp"
#include "streamtts/tensor.hpp"

// Location-based attention over a mixture of logistic distributions.
//
// Each decoder step moves every component's mean forward by a positive
// amount, so alignments can only travel left to right. Weights depend on the
// mixture parameters and the encoder length only, never on encoder values.

namespace streamtts {

struct AttentionState {
    Vec mu;       // component positions, non-decreasing across steps
    Vec scale;    // s_k > 0
    Vec weight;   // mixture weights, sum to 1
    Vec context;  // last context vector, encoder dim

    std::size_t num_mixtures() const { return mu.size(); }
};

/// Two-layer MLP producing [mu_hat(K), s_hat(K), w_hat(K)] from the attention RNN state.
struct AttentionParams {
    LinearParams hidden;  // attn_rnn_dim -> mlp_dim, tanh
    LinearParams output;  // mlp_dim -> 3K

    std::size_t num_mixtures() const { return output.out_dim() / 3; }
    void validate() const;
};

/// mu = 0, s = 1, uniform weights, zero context.
AttentionState initial_attention_state(std::size_t num_mixtures, std::size_t context_dim);

/// Logistic CDF sigmoid((x - mu) / s). Throws std::domain_error if s <= 0.
float logistic_cdf(float x, float mu, float s);

/// a_j for encoder positions j = 1..n_enc (returned 0-based).
Vec compute_alignment(const AttentionState& state, std::size_t n_enc);

/// Weighted sum of memory rows. memory is n_enc x dim.
Vec compute_context(std::span<const float> weights, const Tensor2& memory);

/// Next mixture parameters from the attention RNN output. Context is copied
/// from `prev` unchanged. Throws NumericError on non-finite parameters.
AttentionState advance_state(std::span<const float> rnn_state, const AttentionState& prev,
                             const AttentionParams& params);

}  // namespace streamtts
