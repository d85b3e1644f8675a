#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "support/seeded.hpp"
#include "streamtts/bench.hpp"

using namespace streamtts;

TEST_SUITE("bench") {

TEST_CASE("csv header is fixed") {
    CHECK(bench_csv_header() ==
          "sentence_id,n_phonemes,audio_duration_s,mode,r,chunk_frames,latency_ms_acoustic,latency_ms_end_to_end,"
          "rtf_acoustic,rtf_total,first_chunk_steps,encoder_ms");
}

TEST_CASE("csv rows round trip") {
    BenchRecord rec;
    rec.sentence_id = 3;
    rec.n_phonemes = 200;
    rec.audio_duration_s = 40.0;
    rec.mode = "stream";
    rec.r = 7;
    rec.chunk_frames = 100;
    rec.latency_ms_acoustic = 41.5;
    rec.latency_ms_end_to_end = 42.25;
    rec.rtf_acoustic = 0.03125;
    rec.rtf_total = 0.0325;
    rec.first_chunk_steps = 16;
    rec.encoder_ms = 9.5;
    std::stringstream ss;
    write_bench_csv(ss, std::span<const BenchRecord>(&rec, 1));
    const auto rows = read_bench_csv(ss);
    REQUIRE(rows.size() == 1);
    CHECK(to_csv_row(rows[0]) == to_csv_row(rec));
    CHECK(rows[0].mode == "stream");
    CHECK(rows[0].first_chunk_steps == 16);
}

TEST_CASE("checked-in sample parses") {
    std::ifstream in(std::filesystem::path(STREAMTTS_FIXTURES) / "bench_sample.csv");
    REQUIRE(in);
    const auto rows = read_bench_csv(in);
    REQUIRE(rows.size() == 4);
    CHECK(rows[3].mode == "batch");
    CHECK(rows[3].n_phonemes == 50);
    CHECK(rows[2].latency_ms_acoustic == doctest::Approx(41.02));
}

TEST_CASE("bad csv is rejected") {
    std::stringstream wrong_header("sentence_id,n\n");
    CHECK_THROWS_AS(read_bench_csv(wrong_header), std::runtime_error);
    std::stringstream short_row(bench_csv_header() + "\n1,2,3\n");
    CHECK_THROWS_AS(read_bench_csv(short_row), std::runtime_error);
}

TEST_CASE("length specs") {
    const auto range = parse_lengths("10:100:10");
    CHECK(range.size() == 10);
    CHECK(range.front() == 10);
    CHECK(range.back() == 100);
    CHECK(parse_lengths("10,50,200,1000") == std::vector<std::size_t>{10, 50, 200, 1000});
    CHECK_THROWS_AS(parse_lengths("10:5:1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_lengths("0,5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_lengths("ten"), std::invalid_argument);
}

TEST_CASE("synthetic corpus is deterministic") {
    CHECK(synthetic_phonemes(1, 4, 30, 64) == synthetic_phonemes(1, 4, 30, 64));
    CHECK(synthetic_phonemes(1, 4, 30, 64) != synthetic_phonemes(1, 5, 30, 64));
    for (auto id : synthetic_phonemes(2, 0, 500, 16)) CHECK((id >= 0 && id < 16));
}

TEST_CASE("run_bench covers every configuration") {
    const AcousticModel m = seeded::tiny_model(30, 5, 0);
    BenchOptions opts;
    opts.lengths = parse_lengths("10:100:10");
    opts.r_list = {5};
    opts.repeats = 2;
    std::size_t seen = 0;
    const auto rows = run_bench(m, opts, [&](const BenchRecord&) { ++seen; });
    CHECK(rows.size() == 10 * 2 * 2);
    CHECK(seen == rows.size());
    for (const auto& row : rows) {
        if (row.mode == "stream") CHECK(row.first_chunk_steps == 22);
        CHECK(row.audio_duration_s > 0.0);
        CHECK(row.latency_ms_end_to_end >= row.latency_ms_acoustic);
    }
    BenchOptions bad = opts;
    bad.modes = {"offline"};
    CHECK_THROWS_AS(run_bench(m, bad), std::invalid_argument);
}

}  // TEST_SUITE
