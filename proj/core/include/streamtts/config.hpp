#pragma once

#include <array>
#include <cstddef>

namespace streamtts {

inline constexpr int kFrameDim = 22;  // 20 Bark cepstra, pitch period, pitch correlation
inline constexpr int kSampleRate = 24000;
inline constexpr int kSamplesPerFrame = 240;  // 10 ms hop

struct ArchConfig {
    int vocab_size = 64;
    int embed_dim = 256;
    std::array<int, 2> enc_prenet{256, 128};
    int enc_rnn_dim = 128;  // per direction
    std::array<int, 2> dec_prenet{256, 128};
    int attn_rnn_dim = 256;
    int attn_mlp_dim = 256;
    int dec_lstm_dim = 512;
    int num_mixtures = 5;
    int frame_dim = kFrameDim;
    int frames_per_step = 5;       // r
    int max_frames_per_step = 10;  // rows of the frame projection, in frames
    int max_steps = 0;             // 0: derive from the input length
    float stop_threshold = 0.5f;

    int memory_dim() const { return 2 * enc_rnn_dim; }

    /// Step cap for an input of n phonemes: max_steps if set, otherwise
    /// 20 * n / r with a floor of 50.
    int resolve_max_steps(std::size_t n_phonemes) const;

    /// Throws ConfigError.
    void validate() const;

    bool operator==(const ArchConfig&) const = default;
};

struct PostnetConfig {
    int n_layers = 5;
    int kernel_size = 5;
    int hidden_channels = 256;
    int channels = kFrameDim;

    void validate() const;

    bool operator==(const PostnetConfig&) const = default;
};

struct ReceptiveField {
    int total = 1;
    int half_window = 0;

    bool operator==(const ReceptiveField&) const = default;
};

/// Input span one post-net output depends on. Throws ConfigError on an even kernel.
ReceptiveField receptive_field(const PostnetConfig& cfg);

}  // namespace streamtts
