#include "streamtts/config.hpp"

#include <algorithm>
#include <string>

#include "streamtts/errors.hpp"

namespace streamtts {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

int ArchConfig::resolve_max_steps(std::size_t n_phonemes) const {
    if (max_steps > 0) return max_steps;
    const auto derived = static_cast<long long>(20 * n_phonemes) / frames_per_step;
    return static_cast<int>(std::max<long long>(50, derived));
}

void ArchConfig::validate() const {
    require(vocab_size >= 1, "vocab_size must be positive");
    require(embed_dim >= 1 && enc_rnn_dim >= 1 && attn_rnn_dim >= 1 && attn_mlp_dim >= 1 && dec_lstm_dim >= 1,
            "layer widths must be positive");
    require(enc_prenet[0] >= 1 && enc_prenet[1] >= 1 && dec_prenet[0] >= 1 && dec_prenet[1] >= 1,
            "pre-net widths must be positive");
    require(num_mixtures >= 1, "num_mixtures must be positive");
    require(frame_dim == kFrameDim, "frame_dim must be " + std::to_string(kFrameDim));
    require(frames_per_step >= 1, "frames_per_step must be >= 1");
    require(frames_per_step <= max_frames_per_step,
            "frames_per_step " + std::to_string(frames_per_step) + " exceeds max_frames_per_step " +
                std::to_string(max_frames_per_step));
    require(max_steps >= 0, "max_steps must be >= 0 (0 = derived)");
    require(stop_threshold >= 0.0f, "stop_threshold must be non-negative");
}

void PostnetConfig::validate() const {
    require(n_layers >= 1, "postnet needs at least one layer");
    require(kernel_size >= 1 && kernel_size % 2 == 1,
            "postnet kernel_size must be odd, got " + std::to_string(kernel_size));
    require(hidden_channels >= 1, "postnet hidden_channels must be positive");
    require(channels == kFrameDim, "postnet channels must be " + std::to_string(kFrameDim));
}

ReceptiveField receptive_field(const PostnetConfig& cfg) {
    cfg.validate();
    const int total = cfg.n_layers * (cfg.kernel_size - 1) + 1;
    return {total, (total - 1) / 2};
}

}  // namespace streamtts
