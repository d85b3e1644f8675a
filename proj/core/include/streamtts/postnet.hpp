#pragma once

#include <cstddef>
#include <vector>

#include "streamtts/chunk_plan.hpp"
#include "streamtts/config.hpp"
#include "streamtts/nn.hpp"
#include "streamtts/tensor.hpp"

namespace streamtts {

struct ModelBundle;

/// Stack of "same"-padded 1-D convolutions producing a residual that is
/// added to the decoder frames. Tanh after every layer except the last.
class Postnet {
public:
    Postnet() = default;
    Postnet(PostnetConfig cfg, std::vector<Conv1dParams> layers);

    static Postnet from_bundle(const ModelBundle& bundle);

    const PostnetConfig& config() const { return cfg_; }
    const std::vector<Conv1dParams>& layers() const { return layers_; }
    ReceptiveField receptive_field() const { return streamtts::receptive_field(cfg_); }

    /// Residual for rows [span_first, span_last) of `window`, treating
    /// everything outside the window as zeros. Only the activations those
    /// rows depend on are computed.
    Tensor2 residual(const Tensor2& window, std::size_t span_first, std::size_t span_last) const;

private:
    PostnetConfig cfg_;
    std::vector<Conv1dParams> layers_;
};

/// Residual over a whole sequence (T x 22 in, T x 22 out).
Tensor2 postnet_forward(const Tensor2& frames, const Postnet& postnet);

/// Decoder frames plus residual over a whole sequence.
Tensor2 refine_sequence(const Tensor2& frames, const Postnet& postnet);

/// Refines plan.span() frames from a buffered window of
/// left_ctx + span + right_ctx rows. The result equals the matching slice of
/// refine_sequence() over the full utterance as long as both contexts are at
/// least `half_window` wide, or the window reaches the sequence boundary.
/// Throws std::logic_error when a non-boundary side has less context than
/// `half_window`.
Tensor2 refine_chunk(const Postnet& postnet, const Tensor2& buffered, const ChunkPlan& plan,
                     std::size_t half_window);

}  // namespace streamtts
