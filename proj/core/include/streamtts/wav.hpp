#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace streamtts {

/// RIFF/WAVE, PCM 16-bit, mono.
std::vector<std::uint8_t> encode_wav(std::span<const std::int16_t> samples, int sample_rate);
void write_wav(const std::filesystem::path& path, std::span<const std::int16_t> samples, int sample_rate);

}  // namespace streamtts
