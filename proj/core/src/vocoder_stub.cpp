#include "streamtts/vocoder_stub.hpp"

#include <algorithm>
#include <cmath>

#include "streamtts/acoustic_model.hpp"
#include "streamtts/errors.hpp"

namespace streamtts {

namespace {

constexpr double kDecaySamples = 24.0;

double period_of(float pitch_feature) {
    return std::clamp(120.0 + 80.0 * static_cast<double>(pitch_feature), 40.0, 400.0);
}

double level_of(float c0) { return 12000.0 * std::tanh(std::fabs(static_cast<double>(c0))); }

}  // namespace

AudioChunk frames_to_audio(const Tensor2& frames, PulsePhase& phase) {
    if (frames.cols != static_cast<std::size_t>(kFrameDim)) throw ConfigError("vocoder: frames must be 22 wide");
    AudioChunk chunk;
    chunk.samples.reserve(frames.rows * kSamplesPerFrame);
    for (std::size_t f = 0; f < frames.rows; ++f) {
        const double level = level_of(frames(f, 0));
        const double period = period_of(frames(f, kPitchPeriodIndex));
        if (!phase.primed) {
            phase.level = level;
            phase.period = period;
            phase.primed = true;
        }
        for (int n = 0; n < kSamplesPerFrame; ++n) {
            const double alpha = static_cast<double>(n + 1) / kSamplesPerFrame;
            const double lvl = phase.level + alpha * (level - phase.level);
            const double per = phase.period + alpha * (period - phase.period);
            phase.position += 1.0 / per;
            if (phase.position >= 1.0) phase.position -= 1.0;
            const double value = lvl * std::exp(-phase.position * per / kDecaySamples);
            chunk.samples.push_back(static_cast<std::int16_t>(std::clamp(std::lround(value), -32768L, 32767L)));
        }
        phase.level = level;
        phase.period = period;
    }
    return chunk;
}

}  // namespace streamtts
