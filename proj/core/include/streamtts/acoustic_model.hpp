#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>

#include "streamtts/config.hpp"
#include "streamtts/mol_attention.hpp"
#include "streamtts/nn.hpp"
#include "streamtts/postnet.hpp"
#include "streamtts/tensor.hpp"

namespace streamtts {

struct ModelBundle;

inline constexpr std::size_t kPitchPeriodIndex = 20;
inline constexpr std::size_t kPitchCorrelationIndex = 21;

/// Recurrent part of the encoder, applied to the pre-net output (N x d_in).
class EncoderBody {
public:
    virtual ~EncoderBody() = default;
    virtual Tensor2 forward(const Tensor2& inputs) const = 0;
    virtual std::size_t output_dim() const = 0;
};

/// Bidirectional GRU; memory row j is [forward_j, backward_j].
class BiGruEncoderBody final : public EncoderBody {
public:
    BiGruEncoderBody(GruParams forward_params, GruParams backward_params);

    Tensor2 forward(const Tensor2& inputs) const override;
    std::size_t output_dim() const override { return fwd_.hidden_dim() + bwd_.hidden_dim(); }

private:
    GruParams fwd_;
    GruParams bwd_;
};

struct AcousticWeights {
    EmbeddingTable embedding;
    LinearParams enc_prenet1;
    LinearParams enc_prenet2;
    std::shared_ptr<const EncoderBody> encoder_body;

    LinearParams dec_prenet1;
    LinearParams dec_prenet2;
    GruParams attn_gru;
    AttentionParams attention;
    LinearParams input_proj;  // concat(h, context) -> LSTM width
    LstmParams lstm1;
    LstmParams lstm2;
    LinearParams frame_proj;  // max_frames_per_step * 22 rows; a step with r frames uses the first 22r
    LinearParams stop_proj;
};

/// Runtime overrides that do not change any weight shape.
struct DecodeSettings {
    std::optional<int> frames_per_step;
    std::optional<int> max_steps;
    std::optional<float> stop_threshold;
};

/// Immutable model: config plus shared weights. Cheap to copy.
class AcousticModel {
public:
    AcousticModel(ArchConfig arch, std::shared_ptr<const AcousticWeights> weights,
                  std::shared_ptr<const Postnet> postnet);

    static AcousticModel from_bundle(const ModelBundle& bundle);

    const ArchConfig& arch() const { return arch_; }
    const AcousticWeights& weights() const { return *weights_; }
    const Postnet& postnet() const { return *postnet_; }
    int frames_per_step() const { return arch_.frames_per_step; }

    AcousticModel with_settings(const DecodeSettings& settings) const;
    AcousticModel with_encoder_body(std::shared_ptr<const EncoderBody> body) const;

private:
    ArchConfig arch_;
    std::shared_ptr<const AcousticWeights> weights_;
    std::shared_ptr<const Postnet> postnet_;
};

struct EncoderMemory {
    Tensor2 vectors;  // N x memory_dim

    std::size_t length() const { return vectors.rows; }
    std::size_t dim() const { return vectors.cols; }
};

/// Throws InputError on an empty sequence or an id outside the vocabulary.
EncoderMemory encode(std::span<const std::int32_t> phoneme_ids, const AcousticModel& model);

struct DecoderState {
    Vec attn_h;
    LstmState lstm1;
    LstmState lstm2;
    AttentionState attention;
    Vec prev_frame;  // go frame is all zeros
    int step_index = 0;
};

DecoderState initial_decoder_state(const AcousticModel& model);

struct DecoderStepResult {
    Tensor2 frames;  // r x 22, before the post-net
    float stop_prob = 0.0f;
    DecoderState state;
};

/// One autoregressive step emitting r frames. Throws NumericError on non-finite output.
DecoderStepResult decoder_step(const DecoderState& state, const EncoderMemory& memory, const AcousticModel& model);

/// True iff stop_prob > cfg.stop_threshold, or step_index has reached cfg.max_steps (when positive).
bool should_stop(float stop_prob, int step_index, const ArchConfig& cfg);

struct BatchResult {
    Tensor2 frames;          // refined output, T x 22
    Tensor2 decoder_frames;  // before the post-net residual
    int steps = 0;
    bool truncated = false;  // stopped by the step cap rather than the stop token
    double encoder_ms = 0.0;
    double decoder_ms = 0.0;
    double postnet_ms = 0.0;
};

/// Full non-streaming synthesis: decode to the stop condition, then run the
/// post-net over the whole sequence. T == r * steps.
BatchResult run_batch(std::span<const std::int32_t> phoneme_ids, const AcousticModel& model);

}  // namespace streamtts
