#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "streamtts/acoustic_model.hpp"
#include "streamtts/chunk_plan.hpp"
#include "streamtts/tensor.hpp"
#include "streamtts/vocoder_stub.hpp"

namespace streamtts {

struct StreamConfig {
    std::size_t chunk_frames = 100;
    std::size_t half_window = 10;  // must equal the post-net receptive half window
    bool threaded = false;         // decoder and post-net/vocoder on separate threads
    std::size_t queue_capacity = 4;
    bool vocode = true;
    // Fault injection only: accept a half_window that disagrees with the post-net.
    bool allow_window_mismatch = false;

    /// Throws ConfigError.
    void validate(const Postnet& postnet) const;
};

/// Raw decoder frames waiting for the post-net.
///
/// Holds absolute frames [discard_floor, produced). Frames below
/// finalized - half_window are dropped once a chunk is committed; they were
/// only needed as left context.
class FrameBuffer {
public:
    explicit FrameBuffer(std::size_t frame_dim = kFrameDim) : frame_dim_(frame_dim) {}

    /// Throws std::logic_error after mark_eos().
    void push_frames(const Tensor2& block);
    void mark_eos() { eos_seen_ = true; }

    /// Rows [plan.window_first(), plan.window_first() + plan.window_size()).
    Tensor2 window(const ChunkPlan& plan) const;

    /// Marks plan's span as emitted and drops frames no longer needed as context.
    void commit(const ChunkPlan& plan, std::size_t half_window);

    std::size_t produced() const { return produced_; }
    std::size_t finalized() const { return finalized_; }
    std::size_t discard_floor() const { return floor_; }
    std::size_t retained() const { return produced_ - floor_; }
    bool eos_seen() const { return eos_seen_; }

private:
    std::size_t frame_dim_;
    std::vector<float> data_;  // frames [floor_, produced_)
    std::size_t floor_ = 0;
    std::size_t produced_ = 0;
    std::size_t finalized_ = 0;
    bool eos_seen_ = false;
};

/// Next post-net chunk, if one is ready. Without EOS a chunk needs
/// chunk_frames + half_window unfinalized frames; after EOS whatever remains
/// is flushed in pieces of at most chunk_frames.
std::optional<ChunkPlan> plan_next_chunk(const FrameBuffer& buf, const StreamConfig& cfg);

struct StreamStats {
    int first_chunk_decoder_steps = 0;
    int decoder_steps = 0;
    std::size_t total_frames = 0;
    std::size_t chunks = 0;
    bool truncated = false;
    std::size_t max_buffer_frames = 0;

    double encoder_ms = 0.0;
    double decoder_ms = 0.0;
    double postnet_ms = 0.0;
    double vocoder_ms = 0.0;
    double latency_ms_acoustic = 0.0;     // entry -> first refined chunk
    double latency_ms_end_to_end = 0.0;   // entry -> first audio
    double total_ms = 0.0;

    double audio_seconds() const { return static_cast<double>(total_frames) * 0.01; }
    double acoustic_ms() const { return encoder_ms + decoder_ms + postnet_ms; }
    double rtf_acoustic() const;
    double rtf_total() const;
};

struct FramesReady {
    std::size_t first_frame = 0;
    Tensor2 frames;  // refined
};

struct AudioReady {
    std::size_t first_sample = 0;
    AudioChunk audio;
};

struct Finished {
    StreamStats stats;
};

using StreamEvent = std::variant<FramesReady, AudioReady, Finished>;

/// Receives events in order. With StreamConfig::threaded the calls come from
/// a worker thread; a slow sink blocks the pipeline.
class StreamSink {
public:
    virtual ~StreamSink() = default;
    virtual void on_event(const StreamEvent& event) = 0;
};

/// Keeps every event payload.
class CollectingSink final : public StreamSink {
public:
    void on_event(const StreamEvent& event) override;

    Tensor2 frames{0, kFrameDim};
    std::vector<std::int16_t> samples;
    std::vector<std::size_t> chunk_starts;
    std::optional<StreamStats> stats;
};

/// Encoder, step-by-step decoder, chunked post-net and vocoder. The frames
/// delivered through FramesReady concatenate to exactly run_batch().frames.
StreamStats stream_synthesize(std::span<const std::int32_t> phoneme_ids, const AcousticModel& model,
                              const StreamConfig& cfg, StreamSink& sink);

/// Decoder steps before the first chunk can be refined: ceil((chunk + half_window) / r).
int latency_model(const StreamConfig& cfg, const ArchConfig& arch);

}  // namespace streamtts
