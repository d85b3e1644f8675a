#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamtts/acoustic_model.hpp"

namespace streamtts {

/// One CSV row. Column order is part of the file format; see bench_csv_columns().
struct BenchRecord {
    std::size_t sentence_id = 0;
    std::size_t n_phonemes = 0;
    double audio_duration_s = 0.0;
    std::string mode;  // "stream" or "batch"
    int r = 0;
    std::size_t chunk_frames = 0;
    double latency_ms_acoustic = 0.0;
    double latency_ms_end_to_end = 0.0;
    double rtf_acoustic = 0.0;
    double rtf_total = 0.0;
    int first_chunk_steps = 0;
    double encoder_ms = 0.0;
};

const std::vector<std::string>& bench_csv_columns();
std::string bench_csv_header();
std::string to_csv_row(const BenchRecord& rec);
void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records);
/// Throws std::runtime_error if the header differs from bench_csv_columns().
std::vector<BenchRecord> read_bench_csv(std::istream& in);

/// Deterministic synthetic sentence: n ids in [0, vocab_size).
std::vector<std::int32_t> synthetic_phonemes(std::uint64_t corpus_seed, std::size_t sentence_id, std::size_t n,
                                             int vocab_size);

/// "a:b:step" (inclusive) or a comma separated list. Throws std::invalid_argument.
std::vector<std::size_t> parse_lengths(std::string_view spec);

struct BenchOptions {
    std::vector<std::size_t> lengths{10, 50, 200, 1000};
    std::vector<std::string> modes{"stream", "batch"};
    std::vector<int> r_list{5};
    int repeats = 1;
    std::size_t chunk_frames = 100;
    std::uint64_t corpus_seed = 1;
    int jobs = 1;
    bool vocode = true;
};

/// Times one synthesis. The stop token is disabled so every sentence decodes
/// to the model's length cap (20 * n / r steps, at least 50) and utterance
/// length grows with the phoneme count even for untrained weights.
BenchRecord bench_one(const AcousticModel& model, std::span<const std::int32_t> ids, std::size_t sentence_id,
                      const std::string& mode, int r, std::size_t chunk_frames, bool vocode = true);

/// Rows ordered by (repeat, sentence, mode, r) regardless of `jobs`.
/// `on_row` is called once per finished row, serialized.
std::vector<BenchRecord> run_bench(const AcousticModel& model, const BenchOptions& opts,
                                   const std::function<void(const BenchRecord&)>& on_row = {});

}  // namespace streamtts
