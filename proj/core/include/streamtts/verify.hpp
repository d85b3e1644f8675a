#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "streamtts/acoustic_model.hpp"

namespace streamtts {

struct VerifyOptions {
    int cases = 50;
    std::uint64_t seed = 1;
    std::size_t max_frames = 1200;
    std::size_t max_phonemes = 120;
    std::vector<int> r_choices{2, 3, 5, 7, 10};
    std::vector<std::size_t> chunk_choices{1, 10, 100, 250};
    // Fault injection: stream with this half window instead of the post-net's.
    std::optional<std::size_t> half_window_override;
};

struct VerifyCase {
    int index = 0;
    std::size_t n_phonemes = 0;
    std::size_t target_frames = 0;
    int r = 1;
    std::size_t chunk_frames = 1;
    bool threaded = false;
};

struct CaseOutcome {
    VerifyCase spec;
    std::size_t batch_frames = 0;
    std::size_t stream_frames = 0;
    float max_abs_diff = 0.0f;
    std::optional<std::size_t> first_mismatch;  // frame index
    std::vector<std::size_t> chunk_starts;

    bool passed() const { return batch_frames == stream_frames && !first_mismatch; }
    /// Distance from first_mismatch to the closest chunk start (or the end).
    std::optional<std::size_t> distance_to_boundary() const;
};

struct VerifyReport {
    std::vector<CaseOutcome> outcomes;
    float max_abs_diff = 0.0f;

    bool passed() const;
    const CaseOutcome* first_failure() const;
};

/// Seeded case list: frame counts in [1, max_frames], r and chunk drawn from
/// the choice lists, threaded and single-threaded streaming alternating.
std::vector<VerifyCase> make_verify_cases(const VerifyOptions& opts);

CaseOutcome run_verify_case(const AcousticModel& model, const VerifyCase& c, std::uint64_t seed,
                            std::optional<std::size_t> half_window_override);

/// Streams and batch-synthesizes every case and compares frames bit for bit.
VerifyReport verify_streaming(const AcousticModel& model, const VerifyOptions& opts,
                              const std::function<void(const CaseOutcome&)>& progress = {});

}  // namespace streamtts
