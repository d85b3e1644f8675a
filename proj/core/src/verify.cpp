#include "streamtts/verify.hpp"

#include <algorithm>
#include <cmath>

#include "streamtts/bench.hpp"
#include "streamtts/splitmix64.hpp"
#include "streamtts/streaming_engine.hpp"

namespace streamtts {

std::optional<std::size_t> CaseOutcome::distance_to_boundary() const {
    if (!first_mismatch) return std::nullopt;
    std::size_t best = stream_frames > *first_mismatch ? stream_frames - *first_mismatch : 0;
    for (std::size_t start : chunk_starts) {
        const std::size_t d = start > *first_mismatch ? start - *first_mismatch : *first_mismatch - start;
        best = std::min(best, d);
    }
    return best;
}

bool VerifyReport::passed() const {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const CaseOutcome& o) { return o.passed(); });
}

const CaseOutcome* VerifyReport::first_failure() const {
    for (const auto& o : outcomes) {
        if (!o.passed()) return &o;
    }
    return nullptr;
}

std::vector<VerifyCase> make_verify_cases(const VerifyOptions& opts) {
    SplitMix64 rng(opts.seed);
    std::vector<VerifyCase> cases;
    for (int i = 0; i < opts.cases; ++i) {
        VerifyCase c;
        c.index = i;
        c.n_phonemes = 1 + rng.below(opts.max_phonemes);
        c.target_frames = 1 + rng.below(opts.max_frames);
        c.r = opts.r_choices[rng.below(opts.r_choices.size())];
        c.chunk_frames = opts.chunk_choices[rng.below(opts.chunk_choices.size())];
        c.threaded = i % 2 == 1;
        cases.push_back(c);
    }
    return cases;
}

CaseOutcome run_verify_case(const AcousticModel& model, const VerifyCase& c, std::uint64_t seed,
                            std::optional<std::size_t> half_window_override) {
    const auto r = static_cast<std::size_t>(c.r);
    const int steps = static_cast<int>((c.target_frames + r - 1) / r);
    // Length is fixed by the step cap; the stop token never fires at threshold 1.
    const AcousticModel m = model.with_settings({.frames_per_step = c.r, .max_steps = steps, .stop_threshold = 1.0f});
    const auto ids = synthetic_phonemes(seed, static_cast<std::size_t>(c.index), c.n_phonemes, m.arch().vocab_size);

    const BatchResult batch = run_batch(ids, m);

    StreamConfig cfg;
    cfg.chunk_frames = c.chunk_frames;
    cfg.half_window = static_cast<std::size_t>(m.postnet().receptive_field().half_window);
    if (half_window_override) {
        cfg.half_window = *half_window_override;
        cfg.allow_window_mismatch = true;
    }
    cfg.threaded = c.threaded;
    cfg.vocode = false;
    CollectingSink sink;
    stream_synthesize(ids, m, cfg, sink);

    CaseOutcome out;
    out.spec = c;
    out.batch_frames = batch.frames.rows;
    out.stream_frames = sink.frames.rows;
    out.chunk_starts = sink.chunk_starts;
    const std::size_t common = std::min(out.batch_frames, out.stream_frames);
    const std::size_t width = batch.frames.cols;
    for (std::size_t t = 0; t < common; ++t) {
        const auto a = batch.frames.row(t);
        const auto b = sink.frames.row(t);
        if (!bit_equal(a, b) && !out.first_mismatch) out.first_mismatch = t;
        for (std::size_t d = 0; d < width; ++d) out.max_abs_diff = std::max(out.max_abs_diff, std::fabs(a[d] - b[d]));
    }
    if (!out.first_mismatch && out.batch_frames != out.stream_frames) out.first_mismatch = common;
    return out;
}

VerifyReport verify_streaming(const AcousticModel& model, const VerifyOptions& opts,
                              const std::function<void(const CaseOutcome&)>& progress) {
    VerifyReport report;
    for (const VerifyCase& c : make_verify_cases(opts)) {
        CaseOutcome o = run_verify_case(model, c, opts.seed, opts.half_window_override);
        report.max_abs_diff = std::max(report.max_abs_diff, o.max_abs_diff);
        if (progress) progress(o);
        report.outcomes.push_back(std::move(o));
    }
    return report;
}

}  // namespace streamtts
