#include "streamtts/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "streamtts/splitmix64.hpp"
#include "streamtts/streaming_engine.hpp"
#include "streamtts/vocoder_stub.hpp"

namespace streamtts {

namespace {

using Clock = std::chrono::steady_clock;

class NullSink final : public StreamSink {
public:
    void on_event(const StreamEvent&) override {}
};

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t next = text.find(sep, pos);
        parts.emplace_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return parts;
}

std::size_t to_size(std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a non-negative integer: '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

const std::vector<std::string>& bench_csv_columns() {
    static const std::vector<std::string> columns{
        "sentence_id",  "n_phonemes",  "audio_duration_s", "mode",      "r",
        "chunk_frames", "latency_ms_acoustic", "latency_ms_end_to_end", "rtf_acoustic", "rtf_total",
        "first_chunk_steps", "encoder_ms"};
    return columns;
}

std::string bench_csv_header() {
    std::string out;
    for (const auto& c : bench_csv_columns()) {
        if (!out.empty()) out += ',';
        out += c;
    }
    return out;
}

std::string to_csv_row(const BenchRecord& r) {
    std::ostringstream os;
    os << r.sentence_id << ',' << r.n_phonemes << ',' << fixed(r.audio_duration_s) << ',' << r.mode << ',' << r.r
       << ',' << r.chunk_frames << ',' << fixed(r.latency_ms_acoustic) << ',' << fixed(r.latency_ms_end_to_end) << ','
       << fixed(r.rtf_acoustic) << ',' << fixed(r.rtf_total) << ',' << r.first_chunk_steps << ','
       << fixed(r.encoder_ms);
    return os.str();
}

void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records) {
    out << bench_csv_header() << '\n';
    for (const auto& r : records) out << to_csv_row(r) << '\n';
}

std::vector<BenchRecord> read_bench_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != bench_csv_header()) {
        throw std::runtime_error("bench csv: unexpected header '" + line + "'");
    }
    std::vector<BenchRecord> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != bench_csv_columns().size()) throw std::runtime_error("bench csv: bad row '" + line + "'");
        BenchRecord r;
        r.sentence_id = to_size(f[0]);
        r.n_phonemes = to_size(f[1]);
        r.audio_duration_s = std::stod(f[2]);
        r.mode = f[3];
        r.r = std::stoi(f[4]);
        r.chunk_frames = to_size(f[5]);
        r.latency_ms_acoustic = std::stod(f[6]);
        r.latency_ms_end_to_end = std::stod(f[7]);
        r.rtf_acoustic = std::stod(f[8]);
        r.rtf_total = std::stod(f[9]);
        r.first_chunk_steps = std::stoi(f[10]);
        r.encoder_ms = std::stod(f[11]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<std::int32_t> synthetic_phonemes(std::uint64_t corpus_seed, std::size_t sentence_id, std::size_t n,
                                             int vocab_size) {
    SplitMix64 rng(corpus_seed ^ fnv1a64("sentence:" + std::to_string(sentence_id)));
    std::vector<std::int32_t> ids(n);
    for (auto& id : ids) id = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(vocab_size)));
    return ids;
}

std::vector<std::size_t> parse_lengths(std::string_view spec) {
    std::vector<std::size_t> out;
    if (spec.find(':') != std::string_view::npos) {
        const auto parts = split(spec, ':');
        if (parts.size() != 3) throw std::invalid_argument("lengths range must be start:stop:step");
        const std::size_t lo = to_size(parts[0]);
        const std::size_t hi = to_size(parts[1]);
        const std::size_t step = to_size(parts[2]);
        if (step == 0 || lo == 0 || lo > hi) throw std::invalid_argument("bad lengths range '" + std::string(spec) + "'");
        for (std::size_t n = lo; n <= hi; n += step) out.push_back(n);
    } else {
        for (const auto& p : split(spec, ',')) {
            const std::size_t n = to_size(p);
            if (n == 0) throw std::invalid_argument("phoneme counts must be positive");
            out.push_back(n);
        }
    }
    return out;
}

BenchRecord bench_one(const AcousticModel& model, std::span<const std::int32_t> ids, std::size_t sentence_id,
                      const std::string& mode, int r, std::size_t chunk_frames, bool vocode) {
    const AcousticModel m = model.with_settings({.frames_per_step = r, .max_steps = {}, .stop_threshold = 1.0f});
    BenchRecord rec;
    rec.sentence_id = sentence_id;
    rec.n_phonemes = ids.size();
    rec.mode = mode;
    rec.r = r;
    rec.chunk_frames = chunk_frames;

    if (mode == "stream") {
        StreamConfig cfg;
        cfg.chunk_frames = chunk_frames;
        cfg.half_window = static_cast<std::size_t>(m.postnet().receptive_field().half_window);
        cfg.vocode = vocode;
        NullSink sink;
        const StreamStats s = stream_synthesize(ids, m, cfg, sink);
        rec.audio_duration_s = s.audio_seconds();
        rec.latency_ms_acoustic = s.latency_ms_acoustic;
        rec.latency_ms_end_to_end = s.latency_ms_end_to_end;
        rec.rtf_acoustic = s.rtf_acoustic();
        rec.rtf_total = s.rtf_total();
        rec.first_chunk_steps = s.first_chunk_decoder_steps;
        rec.encoder_ms = s.encoder_ms;
    } else if (mode == "batch") {
        const auto t0 = Clock::now();
        const BatchResult b = run_batch(ids, m);
        const auto t1 = Clock::now();
        if (vocode) {
            PulsePhase phase;
            (void)frames_to_audio(b.frames, phase);
        }
        const auto t2 = Clock::now();
        rec.audio_duration_s = static_cast<double>(b.frames.rows) * 0.01;
        rec.latency_ms_acoustic = std::chrono::duration<double, std::milli>(t1 - t0).count();
        rec.latency_ms_end_to_end = std::chrono::duration<double, std::milli>(t2 - t0).count();
        rec.rtf_acoustic = rec.latency_ms_acoustic / 1000.0 / rec.audio_duration_s;
        rec.rtf_total = rec.latency_ms_end_to_end / 1000.0 / rec.audio_duration_s;
        rec.first_chunk_steps = b.steps;
        rec.encoder_ms = b.encoder_ms;
    } else {
        throw std::invalid_argument("unknown bench mode '" + mode + "'");
    }
    return rec;
}

std::vector<BenchRecord> run_bench(const AcousticModel& model, const BenchOptions& opts,
                                   const std::function<void(const BenchRecord&)>& on_row) {
    struct Task {
        std::size_t sentence;
        std::string mode;
        int r;
    };
    for (const auto& mode : opts.modes) {
        if (mode != "stream" && mode != "batch") throw std::invalid_argument("unknown bench mode '" + mode + "'");
    }
    // Repeats are the outer loop so slow drift in machine speed is spread over
    // every configuration instead of landing on whichever one ran last.
    std::vector<Task> tasks;
    for (int rep = 0; rep < opts.repeats; ++rep) {
        for (std::size_t s = 0; s < opts.lengths.size(); ++s) {
            for (const auto& mode : opts.modes) {
                for (int r : opts.r_list) tasks.push_back({s, mode, r});
            }
        }
    }

    std::vector<BenchRecord> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex row_mutex;
    std::exception_ptr error;
    auto work = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                const Task& t = tasks[i];
                const auto ids =
                    synthetic_phonemes(opts.corpus_seed, t.sentence, opts.lengths[t.sentence], model.arch().vocab_size);
                rows[i] = bench_one(model, ids, t.sentence, t.mode, t.r, opts.chunk_frames, opts.vocode);
                std::lock_guard lock(row_mutex);
                if (on_row) on_row(rows[i]);
            } catch (...) {
                std::lock_guard lock(row_mutex);
                if (!error) error = std::current_exception();
                next = tasks.size();
            }
        }
    };
    const int jobs = std::max(1, opts.jobs);
    if (jobs == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return rows;
}

}  // namespace streamtts
