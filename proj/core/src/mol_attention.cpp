#include "streamtts/mol_attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "streamtts/errors.hpp"

namespace streamtts {

void AttentionParams::validate() const {
    hidden.validate("attention.hidden");
    output.validate("attention.output");
    if (output.in_dim() != hidden.out_dim()) throw ConfigError("attention: hidden/output dims disagree");
    if (output.out_dim() == 0 || output.out_dim() % 3 != 0) {
        throw ConfigError("attention: output dim " + std::to_string(output.out_dim()) + " is not 3K");
    }
}

AttentionState initial_attention_state(std::size_t num_mixtures, std::size_t context_dim) {
    if (num_mixtures == 0) throw ConfigError("attention needs at least one mixture component");
    AttentionState s;
    s.mu.assign(num_mixtures, 0.0f);
    s.scale.assign(num_mixtures, 1.0f);
    s.weight.assign(num_mixtures, 1.0f / static_cast<float>(num_mixtures));
    s.context.assign(context_dim, 0.0f);
    return s;
}

float logistic_cdf(float x, float mu, float s) {
    if (!(s > 0.0f)) throw std::domain_error("logistic_cdf: scale must be positive");
    return sigmoid((x - mu) / s);
}

Vec compute_alignment(const AttentionState& state, std::size_t n_enc) {
    const std::size_t k_count = state.num_mixtures();
    // Bin edges j - 0.5 for j = 1..n_enc+1; neighbouring bins share an edge.
    Vec cdf((n_enc + 1) * k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        for (std::size_t e = 0; e <= n_enc; ++e) {
            cdf[k * (n_enc + 1) + e] = logistic_cdf(static_cast<float>(e) + 0.5f, state.mu[k], state.scale[k]);
        }
    }
    Vec weights(n_enc, 0.0f);
    for (std::size_t j = 0; j < n_enc; ++j) {
        float a = 0.0f;
        for (std::size_t k = 0; k < k_count; ++k) {
            const float* edges = cdf.data() + k * (n_enc + 1);
            a += state.weight[k] * (edges[j + 1] - edges[j]);
        }
        weights[j] = a;
    }
    return weights;
}

Vec compute_context(std::span<const float> weights, const Tensor2& memory) {
    if (weights.size() != memory.rows) {
        throw ConfigError("compute_context: " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(memory.rows) + " memory rows");
    }
    Vec context(memory.cols, 0.0f);
    for (std::size_t j = 0; j < memory.rows; ++j) {
        const float a = weights[j];
        const float* e = memory.row(j).data();
        for (std::size_t d = 0; d < memory.cols; ++d) context[d] += a * e[d];
    }
    return context;
}

AttentionState advance_state(std::span<const float> rnn_state, const AttentionState& prev,
                             const AttentionParams& params) {
    const std::size_t k_count = params.num_mixtures();
    if (prev.num_mixtures() != k_count) throw ConfigError("advance_state: mixture count mismatch");

    Vec hidden = linear_forward(rnn_state, params.hidden);
    apply_activation(hidden, Activation::Tanh);
    const Vec raw = linear_forward(hidden, params.output);

    AttentionState next;
    next.mu.resize(k_count);
    next.scale.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        next.mu[k] = prev.mu[k] + std::exp(raw[k]);
        next.scale[k] = std::exp(raw[k_count + k]);
    }
    next.weight = softmax(std::span<const float>(raw).subspan(2 * k_count, k_count));
    next.context = prev.context;

    if (!all_finite(next.mu) || !all_finite(next.scale) || !all_finite(next.weight)) {
        throw NumericError("attention parameters became non-finite");
    }
    for (float s : next.scale) {
        if (!(s > 0.0f)) throw NumericError("attention scale underflowed to zero");
    }
    return next;
}

}  // namespace streamtts
