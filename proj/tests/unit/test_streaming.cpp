#include <stdexcept>

#include "doctest.h"
#include "support/seeded.hpp"
#include "streamtts/bounded_queue.hpp"
#include "streamtts/errors.hpp"
#include "streamtts/streaming_engine.hpp"

using namespace streamtts;

namespace {

void push_n(FrameBuffer& buf, std::size_t frames) {
    buf.push_frames(Tensor2(frames, kFrameDim));
}

StreamConfig config(std::size_t chunk, bool threaded = false) {
    StreamConfig cfg;
    cfg.chunk_frames = chunk;
    cfg.half_window = 10;
    cfg.threaded = threaded;
    return cfg;
}

CollectingSink stream(const AcousticModel& m, std::span<const std::int32_t> ids, const StreamConfig& cfg) {
    CollectingSink sink;
    stream_synthesize(ids, m, cfg, sink);
    return sink;
}

const std::int32_t kIds[] = {1, 5, 2, 9, 3, 3, 7};

}  // namespace

TEST_SUITE("streaming") {

TEST_CASE("chunk readiness") {
    const StreamConfig cfg = config(100);
    FrameBuffer buf;
    push_n(buf, 109);
    CHECK_FALSE(plan_next_chunk(buf, cfg));

    push_n(buf, 1);
    const auto first = plan_next_chunk(buf, cfg);
    REQUIRE(first);
    CHECK(first->start == 0);
    CHECK(first->end == 100);
    CHECK(first->left_ctx == 0);
    CHECK(first->right_ctx == 10);
    CHECK(first->is_first);
    CHECK_FALSE(first->is_last);
}

TEST_CASE("end of stream flushes the tail") {
    const StreamConfig cfg = config(100);
    FrameBuffer buf;
    push_n(buf, 230);
    for (std::size_t end : {100u, 200u}) {
        const auto p = plan_next_chunk(buf, cfg);
        REQUIRE(p);
        CHECK(p->end == end);
        buf.commit(*p, 10);
    }
    CHECK_FALSE(plan_next_chunk(buf, cfg));  // 30 pending, not enough without EOS
    buf.mark_eos();
    const auto last = plan_next_chunk(buf, cfg);
    REQUIRE(last);
    CHECK(last->start == 200);
    CHECK(last->end == 230);
    CHECK(last->left_ctx == 10);
    CHECK(last->right_ctx == 0);
    CHECK(last->is_last);
    buf.commit(*last, 10);
    CHECK_FALSE(plan_next_chunk(buf, cfg));
}

TEST_CASE("frame buffer bookkeeping") {
    FrameBuffer buf;
    push_n(buf, 5);
    CHECK(buf.produced() == 5);
    for (int i = 1; i < 22; ++i) push_n(buf, 5);
    CHECK(buf.produced() == 110);
    CHECK(plan_next_chunk(buf, config(100)));
    buf.mark_eos();
    CHECK_THROWS_AS(push_n(buf, 5), std::logic_error);
}

TEST_CASE("committed frames beyond the left context are dropped") {
    const StreamConfig cfg = config(100);
    FrameBuffer buf;
    push_n(buf, 110);
    const auto p = plan_next_chunk(buf, cfg);
    buf.commit(*p, 10);
    CHECK(buf.discard_floor() == 90);
    CHECK(buf.retained() == 20);
    ChunkPlan stale = *p;
    CHECK_THROWS_AS(buf.window(stale), std::logic_error);
}

TEST_CASE("latency model") {
    ArchConfig a;
    a.frames_per_step = 5;
    CHECK(latency_model(config(100), a) == 22);
    a.frames_per_step = 10;
    CHECK(latency_model(config(100), a) == 11);
    a.frames_per_step = 1;
    CHECK(latency_model(config(1), a) == 11);
}

TEST_CASE("first audio arrives after the predicted number of steps") {
    for (int r : {2, 3, 5, 7, 10}) {
        const AcousticModel m = seeded::tiny_model(21, r, 80);
        const StreamConfig cfg = config(100);
        const CollectingSink sink = stream(m, kIds, cfg);
        REQUIRE(sink.stats);
        CHECK(sink.stats->first_chunk_decoder_steps == latency_model(cfg, m.arch()));
    }
}

TEST_CASE("short utterance: one chunk at end of stream") {
    const AcousticModel m = seeded::tiny_model(22, 5, 8);  // T = 40
    const CollectingSink sink = stream(m, kIds, config(100));
    CHECK(sink.chunk_starts == std::vector<std::size_t>{0});
    CHECK(bit_equal(sink.frames, run_batch(kIds, m).frames));
}

TEST_CASE("T=230 is cut into [0,100) [100,200) [200,230)") {
    const AcousticModel m = seeded::tiny_model(23, 5, 46);
    const CollectingSink sink = stream(m, kIds, config(100));
    CHECK(sink.frames.rows == 230);
    CHECK(sink.chunk_starts == std::vector<std::size_t>{0, 100, 200});
    CHECK(bit_equal(sink.frames, run_batch(kIds, m).frames));
}

TEST_CASE("streaming equals batch across r and chunk sizes") {
    for (int r : {2, 3, 7}) {
        for (std::size_t chunk : {1u, 10u, 37u, 250u}) {
            const AcousticModel m = seeded::tiny_model(24, r, 61);
            const BatchResult batch = run_batch(kIds, m);
            const CollectingSink sink = stream(m, kIds, config(chunk));
            CHECK(bit_equal(sink.frames, batch.frames));
        }
    }
}

TEST_CASE("threaded and single-threaded streams are identical") {
    const AcousticModel m = seeded::tiny_model(25, 3, 90);
    const CollectingSink a = stream(m, kIds, config(20, false));
    const CollectingSink b = stream(m, kIds, config(20, true));
    CHECK(bit_equal(a.frames, b.frames));
    CHECK(a.samples == b.samples);
    CHECK(a.chunk_starts == b.chunk_starts);
}

TEST_CASE("buffer never holds more than chunk + 2W + r frames") {
    for (int r : {1, 4, 10}) {
        for (std::size_t chunk : {1u, 25u, 100u}) {
            const AcousticModel m = seeded::tiny_model(26, r, 70);
            const CollectingSink sink = stream(m, kIds, config(chunk));
            REQUIRE(sink.stats);
            CHECK(sink.stats->max_buffer_frames <= chunk + 20 + static_cast<std::size_t>(r));
        }
    }
}

TEST_CASE("half window must match the post-net unless explicitly allowed") {
    const AcousticModel m = seeded::tiny_model(27, 5, 10);
    StreamConfig cfg = config(100);
    cfg.half_window = 9;
    CollectingSink sink;
    CHECK_THROWS_AS(stream_synthesize(kIds, m, cfg, sink), ConfigError);
    cfg.allow_window_mismatch = true;
    CHECK_NOTHROW(stream_synthesize(kIds, m, cfg, sink));
}

TEST_CASE("a failing consumer does not hang the producer") {
    struct Exploding final : StreamSink {
        void on_event(const StreamEvent&) override { throw std::runtime_error("sink full"); }
    };
    const AcousticModel m = seeded::tiny_model(28, 2, 200);
    Exploding sink;
    CHECK_THROWS_AS(stream_synthesize(kIds, m, config(10, true), sink), std::runtime_error);
}

TEST_CASE("bounded queue") {
    BoundedQueue<int> q(2);
    CHECK(q.push(1));
    CHECK(q.push(2));
    CHECK(q.pop() == 1);
    q.close();
    CHECK_FALSE(q.push(3));
    CHECK(q.pop() == 2);
    CHECK_FALSE(q.pop());
}

}  // TEST_SUITE
