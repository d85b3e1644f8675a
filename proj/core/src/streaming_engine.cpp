#include "streamtts/streaming_engine.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>

#include "streamtts/bounded_queue.hpp"
#include "streamtts/errors.hpp"

namespace streamtts {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

void StreamConfig::validate(const Postnet& postnet) const {
    if (chunk_frames < 1) throw ConfigError("chunk_frames must be >= 1");
    const auto expected = static_cast<std::size_t>(postnet.receptive_field().half_window);
    if (!allow_window_mismatch && half_window != expected) {
        throw ConfigError("half_window " + std::to_string(half_window) + " does not match the post-net (" +
                          std::to_string(expected) + ")");
    }
}

void FrameBuffer::push_frames(const Tensor2& block) {
    if (eos_seen_) throw std::logic_error("push_frames after end of stream");
    if (block.cols != frame_dim_) throw ConfigError("push_frames: frame width mismatch");
    data_.insert(data_.end(), block.data.begin(), block.data.end());
    produced_ += block.rows;
}

Tensor2 FrameBuffer::window(const ChunkPlan& plan) const {
    const std::size_t first = plan.window_first();
    if (first < floor_ || first + plan.window_size() > produced_) {
        throw std::logic_error("FrameBuffer::window: frames " + std::to_string(first) + ".." +
                               std::to_string(first + plan.window_size()) + " not retained");
    }
    Tensor2 out(plan.window_size(), frame_dim_);
    const auto offset = static_cast<std::ptrdiff_t>((first - floor_) * frame_dim_);
    std::copy_n(data_.begin() + offset, out.data.size(), out.data.begin());
    return out;
}

void FrameBuffer::commit(const ChunkPlan& plan, std::size_t half_window) {
    if (plan.start != finalized_ || plan.end > produced_) throw std::logic_error("FrameBuffer::commit: out of order");
    finalized_ = plan.end;
    const std::size_t new_floor = finalized_ > half_window ? finalized_ - half_window : 0;
    if (new_floor > floor_) {
        data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>((new_floor - floor_) * frame_dim_));
        floor_ = new_floor;
    }
}

std::optional<ChunkPlan> plan_next_chunk(const FrameBuffer& buf, const StreamConfig& cfg) {
    const std::size_t produced = buf.produced();
    const std::size_t finalized = buf.finalized();
    const std::size_t w = cfg.half_window;
    const std::size_t pending = produced - finalized;

    ChunkPlan plan;
    plan.start = finalized;
    plan.left_ctx = std::min(w, finalized);
    plan.is_first = finalized == 0;
    if (buf.eos_seen()) {
        if (pending == 0) return std::nullopt;
        plan.end = std::min(finalized + cfg.chunk_frames, produced);
        plan.right_ctx = std::min(w, produced - plan.end);
        plan.is_last = plan.end == produced;
        plan.reaches_end = plan.end + plan.right_ctx == produced;
    } else {
        if (pending < cfg.chunk_frames + w) return std::nullopt;
        plan.end = finalized + cfg.chunk_frames;
        plan.right_ctx = w;
    }
    return plan;
}

double StreamStats::rtf_acoustic() const {
    const double secs = audio_seconds();
    return secs > 0.0 ? acoustic_ms() / 1000.0 / secs : 0.0;
}

double StreamStats::rtf_total() const {
    const double secs = audio_seconds();
    return secs > 0.0 ? total_ms / 1000.0 / secs : 0.0;
}

void CollectingSink::on_event(const StreamEvent& event) {
    if (const auto* f = std::get_if<FramesReady>(&event)) {
        chunk_starts.push_back(f->first_frame);
        frames.append_rows(f->frames);
    } else if (const auto* a = std::get_if<AudioReady>(&event)) {
        samples.insert(samples.end(), a->audio.samples.begin(), a->audio.samples.end());
    } else {
        stats = std::get<Finished>(event).stats;
    }
}

int latency_model(const StreamConfig& cfg, const ArchConfig& arch) {
    const auto need = cfg.chunk_frames + cfg.half_window;
    const auto r = static_cast<std::size_t>(arch.frames_per_step);
    return static_cast<int>((need + r - 1) / r);
}

namespace {

struct DecodedBlock {
    Tensor2 frames;
    int steps = 0;  // decoder steps taken including this block
    bool eos = false;
    bool truncated = false;
};

// Consumer side: buffer, post-net chunks, vocoder, sink.
class ChunkRefiner {
public:
    ChunkRefiner(const Postnet& postnet, const StreamConfig& cfg, StreamSink& sink, Clock::time_point t0)
        : postnet_(postnet), cfg_(cfg), sink_(sink), t0_(t0) {}

    void accept(const DecodedBlock& block) {
        buffer_.push_frames(block.frames);
        stats_.max_buffer_frames = std::max(stats_.max_buffer_frames, buffer_.retained());
        if (block.eos) {
            buffer_.mark_eos();
            stats_.truncated = block.truncated;
        }
        while (auto plan = plan_next_chunk(buffer_, cfg_)) {
            if (plan->is_first) stats_.first_chunk_decoder_steps = block.steps;
            emit(*plan);
        }
    }

    const StreamStats& stats() const { return stats_; }
    std::size_t finalized() const { return buffer_.finalized(); }

private:
    void emit(const ChunkPlan& plan) {
        auto t = Clock::now();
        FramesReady ready{plan.start, refine_chunk(postnet_, buffer_.window(plan), plan, cfg_.half_window)};
        buffer_.commit(plan, cfg_.half_window);
        const auto refined_at = Clock::now();
        stats_.postnet_ms += ms_between(t, refined_at);
        ++stats_.chunks;
        if (plan.is_first) stats_.latency_ms_acoustic = ms_between(t0_, refined_at);

        std::optional<AudioReady> audio;
        if (cfg_.vocode) {
            t = Clock::now();
            audio = AudioReady{samples_emitted_, vocoder_.synthesize(ready.frames)};
            const auto vocoded_at = Clock::now();
            stats_.vocoder_ms += ms_between(t, vocoded_at);
            samples_emitted_ += audio->audio.samples.size();
            if (plan.is_first) stats_.latency_ms_end_to_end = ms_between(t0_, vocoded_at);
        } else if (plan.is_first) {
            stats_.latency_ms_end_to_end = stats_.latency_ms_acoustic;
        }

        sink_.on_event(StreamEvent{std::move(ready)});
        if (audio) sink_.on_event(StreamEvent{std::move(*audio)});
    }

    const Postnet& postnet_;
    const StreamConfig& cfg_;
    StreamSink& sink_;
    Clock::time_point t0_;
    FrameBuffer buffer_;
    VocoderStub vocoder_;
    std::size_t samples_emitted_ = 0;
    StreamStats stats_;
};

struct ProducerStats {
    double encoder_ms = 0.0;
    double decoder_ms = 0.0;
    int steps = 0;
};

// Encoder plus decoder loop. `deliver` returns false when the consumer has gone away.
template <typename Deliver>
ProducerStats produce(std::span<const std::int32_t> ids, const AcousticModel& model, Deliver&& deliver) {
    ProducerStats ps;
    auto t = Clock::now();
    const EncoderMemory memory = encode(ids, model);
    ps.encoder_ms = ms_between(t, Clock::now());

    ArchConfig limits = model.arch();
    limits.max_steps = limits.resolve_max_steps(ids.size());
    DecoderState state = initial_decoder_state(model);
    for (;;) {
        t = Clock::now();
        DecoderStepResult step = decoder_step(state, memory, model);
        state = std::move(step.state);
        const bool stop = should_stop(step.stop_prob, state.step_index, limits);
        ps.decoder_ms += ms_between(t, Clock::now());
        ps.steps = state.step_index;
        DecodedBlock block{std::move(step.frames), state.step_index, stop,
                           stop && !(step.stop_prob > limits.stop_threshold)};
        if (!deliver(std::move(block)) || stop) break;
    }
    return ps;
}

}  // namespace

StreamStats stream_synthesize(std::span<const std::int32_t> phoneme_ids, const AcousticModel& model,
                              const StreamConfig& cfg, StreamSink& sink) {
    cfg.validate(model.postnet());
    const auto t0 = Clock::now();
    ChunkRefiner refiner(model.postnet(), cfg, sink, t0);
    ProducerStats ps;

    if (!cfg.threaded) {
        ps = produce(phoneme_ids, model, [&](DecodedBlock&& block) {
            refiner.accept(block);
            return true;
        });
    } else {
        BoundedQueue<DecodedBlock> queue(cfg.queue_capacity);
        std::exception_ptr consumer_error;
        std::thread worker([&] {
            try {
                while (auto block = queue.pop()) refiner.accept(*block);
            } catch (...) {
                consumer_error = std::current_exception();
                queue.close();
            }
        });
        try {
            ps = produce(phoneme_ids, model, [&](DecodedBlock&& block) { return queue.push(std::move(block)); });
        } catch (...) {
            queue.close();
            worker.join();
            throw;
        }
        queue.close();
        worker.join();
        if (consumer_error) std::rethrow_exception(consumer_error);
    }

    StreamStats stats = refiner.stats();
    stats.encoder_ms = ps.encoder_ms;
    stats.decoder_ms = ps.decoder_ms;
    stats.decoder_steps = ps.steps;
    stats.total_frames = refiner.finalized();
    stats.total_ms = ms_between(t0, Clock::now());
    sink.on_event(StreamEvent{Finished{stats}});
    return stats;
}

}  // namespace streamtts
