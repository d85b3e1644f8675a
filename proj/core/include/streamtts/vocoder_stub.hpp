#pragma once

#include <cstdint>
#include <vector>

#include "streamtts/config.hpp"
#include "streamtts/tensor.hpp"

// Frame-synchronous stand-in for a neural vocoder: 240 samples per 22-dim
// frame at 24 kHz. Produces a decaying pulse train whose spacing follows the
// pitch-period feature and whose level follows cepstral coefficient 0.
//
// Feature mapping (this stub's own convention, not LPCNet's):
//   period  = clamp(120 + 80 * frame[20], 40, 400) samples
//   level   = 12000 * tanh(|frame[0]|)
// Level and period glide linearly from the previous frame's values across
// each frame, so chunk boundaries do not click.

namespace streamtts {

struct AudioChunk {
    int sample_rate = kSampleRate;
    std::vector<std::int16_t> samples;
};

/// Everything carried from one frame to the next.
struct PulsePhase {
    double position = 0.0;  // fraction of the current pitch cycle, [0, 1)
    double level = 0.0;
    double period = 0.0;
    bool primed = false;  // false until the first frame has been seen
};

/// Exactly 240 * frames.rows samples. Splitting a sequence into pieces and
/// carrying `phase` between calls yields the same samples as one call.
AudioChunk frames_to_audio(const Tensor2& frames, PulsePhase& phase);

class VocoderStub {
public:
    AudioChunk synthesize(const Tensor2& frames) { return frames_to_audio(frames, phase_); }
    void reset() { phase_ = {}; }

private:
    PulsePhase phase_;
};

}  // namespace streamtts
