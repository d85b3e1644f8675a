// streamtts: generate models, synthesize, verify streaming equivalence, benchmark.
//
// Exit codes: 0 ok, 1 invalid arguments or input, 2 model load failure,
// 3 runtime/numeric failure, 4 streaming output differs from batch output.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "streamtts/acoustic_model.hpp"
#include "streamtts/bench.hpp"
#include "streamtts/errors.hpp"
#include "streamtts/model_bundle.hpp"
#include "streamtts/streaming_engine.hpp"
#include "streamtts/verify.hpp"
#include "streamtts/vocoder_stub.hpp"
#include "streamtts/wav.hpp"

namespace {

using namespace streamtts;

constexpr int kExitArgs = 1;
constexpr int kExitLoad = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitMismatch = 4;

struct ArgError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::int32_t> parse_phonemes(const std::string& arg) {
    std::string text = arg;
    if (!text.empty() && text[0] == '@') {
        std::ifstream in(text.substr(1));
        if (!in) throw ArgError("cannot read phoneme file " + text.substr(1));
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    std::vector<std::int32_t> ids;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
        try {
            std::size_t used = 0;
            const long v = std::stol(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            ids.push_back(static_cast<std::int32_t>(v));
        } catch (const std::exception&) {
            throw ArgError("phoneme ids must be integers, got '" + tok + "'");
        }
    }
    if (ids.empty()) throw ArgError("no phoneme ids given");
    return ids;
}

AcousticModel open_model(const std::string& path) {
    try {
        return AcousticModel::from_bundle(load_model(path));
    } catch (const LoadError&) {
        throw;
    } catch (const std::exception& e) {
        throw LoadError(e.what());
    }
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::istringstream is(item);
        T v{};
        if (!(is >> v) || !is.eof()) throw ArgError("bad list item '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ArgError("empty list '" + text + "'");
    return out;
}

// ---------------------------------------------------------------------------

struct GenmodelArgs {
    std::uint64_t seed = 0;
    std::string out;
    int r = 5;
    int vocab = 64;
    int max_steps = 0;
    float stop_threshold = 0.5f;
};

int run_genmodel(const GenmodelArgs& a) {
    ArchConfig arch;
    arch.frames_per_step = a.r;
    arch.vocab_size = a.vocab;
    arch.max_steps = a.max_steps;
    arch.stop_threshold = a.stop_threshold;
    save_model(genmodel(a.seed, arch), a.out);
    std::cout << "wrote " << a.out << " (seed " << a.seed << ")\n";
    return 0;
}

struct SynthArgs {
    std::string model;
    std::string phonemes;
    std::string mode = "stream";
    int r = 0;
    std::size_t chunk = 100;
    std::string wav;
    std::string csv_stats;
    bool threaded = false;
    int max_steps = -1;
    float stop_threshold = -1.0f;
};

int run_synth(const SynthArgs& a) {
    const auto ids = parse_phonemes(a.phonemes);
    AcousticModel model = open_model(a.model);
    DecodeSettings settings;
    if (a.r > 0) settings.frames_per_step = a.r;
    if (a.max_steps >= 0) settings.max_steps = a.max_steps;
    if (a.stop_threshold >= 0.0f) settings.stop_threshold = a.stop_threshold;
    try {
        model = model.with_settings(settings);
    } catch (const ConfigError& e) {
        throw ArgError(e.what());
    }

    BenchRecord rec;
    rec.n_phonemes = ids.size();
    rec.mode = a.mode;
    rec.r = model.frames_per_step();
    rec.chunk_frames = a.chunk;
    std::vector<std::int16_t> samples;
    bool truncated = false;
    int steps = 0;

    if (a.mode == "stream") {
        StreamConfig cfg;
        cfg.chunk_frames = a.chunk;
        cfg.half_window = static_cast<std::size_t>(model.postnet().receptive_field().half_window);
        cfg.threaded = a.threaded;
        CollectingSink sink;
        const StreamStats s = stream_synthesize(ids, model, cfg, sink);
        samples = std::move(sink.samples);
        rec.audio_duration_s = s.audio_seconds();
        rec.latency_ms_acoustic = s.latency_ms_acoustic;
        rec.latency_ms_end_to_end = s.latency_ms_end_to_end;
        rec.rtf_acoustic = s.rtf_acoustic();
        rec.rtf_total = s.rtf_total();
        rec.first_chunk_steps = s.first_chunk_decoder_steps;
        rec.encoder_ms = s.encoder_ms;
        truncated = s.truncated;
        steps = s.decoder_steps;
        std::cout << "chunks=" << s.chunks << " max_buffer_frames=" << s.max_buffer_frames << '\n';
    } else {
        const BatchResult b = run_batch(ids, model);
        PulsePhase phase;
        samples = frames_to_audio(b.frames, phase).samples;
        rec.audio_duration_s = static_cast<double>(b.frames.rows) * 0.01;
        rec.latency_ms_acoustic = b.encoder_ms + b.decoder_ms + b.postnet_ms;
        rec.latency_ms_end_to_end = rec.latency_ms_acoustic;
        rec.rtf_acoustic = rec.latency_ms_acoustic / 1000.0 / rec.audio_duration_s;
        rec.rtf_total = rec.rtf_acoustic;
        rec.first_chunk_steps = b.steps;
        rec.encoder_ms = b.encoder_ms;
        truncated = b.truncated;
        steps = b.steps;
    }

    std::cout << "mode=" << a.mode << " r=" << rec.r << " steps=" << steps
              << " frames=" << static_cast<long>(rec.audio_duration_s * 100.0 + 0.5)
              << " first_chunk_steps=" << rec.first_chunk_steps << " truncated=" << (truncated ? 1 : 0)
              << " latency_ms=" << rec.latency_ms_end_to_end << " rtf=" << rec.rtf_total << '\n';
    if (!a.wav.empty()) write_wav(a.wav, samples, kSampleRate);
    if (!a.csv_stats.empty()) {
        std::ofstream out(a.csv_stats);
        if (!out) throw ArgError("cannot write " + a.csv_stats);
        write_bench_csv(out, std::span<const BenchRecord>(&rec, 1));
    }
    return 0;
}

struct BenchArgs {
    std::string model;
    std::string lengths = "10,50,200,1000";
    std::string modes = "stream,batch";
    std::string r_list = "5";
    int repeats = 1;
    std::string out;
    int jobs = 1;
    std::size_t chunk = 100;
    std::uint64_t corpus_seed = 1;
    bool no_vocode = false;
};

int run_bench_cmd(const BenchArgs& a) {
    BenchOptions opts;
    try {
        opts.lengths = parse_lengths(a.lengths);
    } catch (const std::invalid_argument& e) {
        throw ArgError(e.what());
    }
    opts.modes = parse_list<std::string>(a.modes);
    opts.r_list = parse_list<int>(a.r_list);
    opts.repeats = a.repeats;
    opts.chunk_frames = a.chunk;
    opts.corpus_seed = a.corpus_seed;
    opts.vocode = !a.no_vocode;
    opts.jobs = a.jobs;
    if (const char* env = std::getenv("STREAMTTS_THREADS")) {
        try {
            opts.jobs = std::stoi(env);
        } catch (const std::exception&) {
            throw ArgError(std::string("STREAMTTS_THREADS is not an integer: ") + env);
        }
    }
    if (opts.repeats < 1) throw ArgError("--repeats must be >= 1");
    for (const auto& m : opts.modes) {
        if (m != "stream" && m != "batch") throw ArgError("unknown mode '" + m + "'");
    }
    const AcousticModel model = open_model(a.model);
    for (int r : opts.r_list) {
        if (r < 1 || r > model.arch().max_frames_per_step) throw ArgError("r out of range: " + std::to_string(r));
    }

    std::ofstream out(a.out);
    if (!out) throw ArgError("cannot write " + a.out);
    const auto rows = run_bench(model, opts, [](const BenchRecord& r) {
        std::cerr << r.mode << " r=" << r.r << " n=" << r.n_phonemes << " latency_ms=" << r.latency_ms_end_to_end
                  << " rtf=" << r.rtf_acoustic << '\n';
    });
    write_bench_csv(out, rows);
    std::cout << "wrote " << rows.size() << " rows to " << a.out << '\n';
    return 0;
}

struct VerifyArgs {
    std::string model;
    std::uint64_t model_seed = 0;
    int cases = 50;
    std::uint64_t seed = 1;
    int half_window = -1;
    std::size_t max_frames = 1200;
};

int run_verify_cmd(const VerifyArgs& a) {
    const AcousticModel model =
        a.model.empty() ? AcousticModel::from_bundle(genmodel(a.model_seed, ArchConfig{})) : open_model(a.model);
    VerifyOptions opts;
    opts.cases = a.cases;
    opts.seed = a.seed;
    opts.max_frames = a.max_frames;
    if (a.cases < 0) throw ArgError("--cases must be >= 0");
    if (a.cases == 0) {
        std::cerr << "warning: --cases 0, nothing to verify\n";
        std::cout << "verify: 0 cases, max abs diff 0, PASS\n";
        return 0;
    }
    if (a.half_window >= 0) {
        opts.half_window_override = static_cast<std::size_t>(a.half_window);
        std::cerr << "warning: half window forced to " << a.half_window << " (post-net needs "
                  << model.postnet().receptive_field().half_window << ")\n";
    }
    const VerifyReport report = verify_streaming(model, opts, [](const CaseOutcome& o) {
        std::cout << "case " << o.spec.index << ": frames=" << o.batch_frames << " phonemes=" << o.spec.n_phonemes
                  << " r=" << o.spec.r << " chunk=" << o.spec.chunk_frames << " threaded=" << o.spec.threaded
                  << " max_abs_diff=" << o.max_abs_diff << (o.passed() ? " ok" : " MISMATCH") << '\n';
    });
    if (const CaseOutcome* bad = report.first_failure()) {
        std::cout << "verify: FAIL case " << bad->spec.index << ": first differing frame " << *bad->first_mismatch
                  << " (" << *bad->distance_to_boundary() << " frames from a chunk boundary), max abs diff "
                  << report.max_abs_diff << '\n';
        return kExitMismatch;
    }
    std::cout << "verify: " << report.outcomes.size() << " cases, max abs diff " << report.max_abs_diff
              << ", PASS\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming acoustic model inference"};
    app.require_subcommand(1);

    GenmodelArgs gen;
    auto* genmodel_cmd = app.add_subcommand("genmodel", "Write a deterministic random model");
    genmodel_cmd->add_option("--seed", gen.seed, "64-bit seed");
    genmodel_cmd->add_option("--out", gen.out, "Output model file")->required();
    genmodel_cmd->add_option("--r", gen.r, "Default frames per step")->check(CLI::Range(1, 10));
    genmodel_cmd->add_option("--vocab", gen.vocab, "Phoneme vocabulary size")->check(CLI::PositiveNumber);
    genmodel_cmd->add_option("--max-steps", gen.max_steps, "Decoder step cap (0 = derived from input length)")
        ->check(CLI::NonNegativeNumber);
    genmodel_cmd->add_option("--stop-threshold", gen.stop_threshold, "Stop token threshold");

    SynthArgs syn;
    auto* synth_cmd = app.add_subcommand("synth", "Synthesize one utterance");
    synth_cmd->add_option("--model", syn.model)->required();
    synth_cmd->add_option("--phonemes", syn.phonemes, "Space separated ids, or @file")->required();
    synth_cmd->add_option("--mode", syn.mode)->check(CLI::IsMember({"stream", "batch"}));
    synth_cmd->add_option("--r", syn.r, "Frames per step override")->check(CLI::Range(1, 10));
    synth_cmd->add_option("--chunk", syn.chunk, "Post-net chunk size in frames")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--wav", syn.wav, "Write 24 kHz PCM-16 WAV");
    synth_cmd->add_option("--csv-stats", syn.csv_stats, "Write one bench CSV row");
    synth_cmd->add_flag("--threaded", syn.threaded, "Run post-net and vocoder on a worker thread");
    synth_cmd->add_option("--max-steps", syn.max_steps, "Decoder step cap override")->check(CLI::NonNegativeNumber);
    synth_cmd->add_option("--stop-threshold", syn.stop_threshold, "Stop token threshold override")
        ->check(CLI::NonNegativeNumber);

    BenchArgs ben;
    auto* bench_cmd = app.add_subcommand("bench", "Latency/RTF sweep over a synthetic corpus");
    bench_cmd->add_option("--model", ben.model)->required();
    bench_cmd->add_option("--lengths", ben.lengths, "start:stop:step or comma list of phoneme counts");
    bench_cmd->add_option("--modes", ben.modes, "Comma list of stream,batch");
    bench_cmd->add_option("--r-list", ben.r_list, "Comma list of frames-per-step values");
    bench_cmd->add_option("--repeats", ben.repeats);
    bench_cmd->add_option("--out", ben.out, "CSV output")->required();
    bench_cmd->add_option("--jobs", ben.jobs, "Parallel sentences (STREAMTTS_THREADS overrides)");
    bench_cmd->add_option("--chunk", ben.chunk)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--corpus-seed", ben.corpus_seed);
    bench_cmd->add_flag("--no-vocode", ben.no_vocode, "Skip the vocoder stub");

    VerifyArgs ver;
    auto* verify_cmd = app.add_subcommand("verify", "Check streaming output against batch output bit for bit");
    verify_cmd->add_option("--model", ver.model, "Model file (default: generated from --model-seed)");
    verify_cmd->add_option("--model-seed", ver.model_seed);
    verify_cmd->add_option("--cases", ver.cases);
    verify_cmd->add_option("--seed", ver.seed, "Case generator seed");
    verify_cmd->add_option("--max-frames", ver.max_frames)->check(CLI::PositiveNumber);
    verify_cmd->add_option("--half-window", ver.half_window, "Fault injection: stream with this context width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitArgs;
    }

    try {
        if (*genmodel_cmd) return run_genmodel(gen);
        if (*synth_cmd) return run_synth(syn);
        if (*bench_cmd) return run_bench_cmd(ben);
        if (*verify_cmd) return run_verify_cmd(ver);
    } catch (const ArgError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitArgs;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitArgs;
    } catch (const LoadError& e) {
        std::cerr << "model load failed: " << e.what() << '\n';
        return kExitLoad;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitArgs;
}
