#include "streamtts/wav.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace streamtts {

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint32_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

std::vector<std::uint8_t> encode_wav(std::span<const std::int16_t> samples, int sample_rate) {
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_le(out, 36 + data_bytes, 4);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_le(out, 16, 4);
    put_le(out, 1, 2);  // PCM
    put_le(out, 1, 2);  // mono
    put_le(out, static_cast<std::uint32_t>(sample_rate), 4);
    put_le(out, static_cast<std::uint32_t>(sample_rate) * 2, 4);
    put_le(out, 2, 2);
    put_le(out, 16, 2);
    put_tag(out, "data");
    put_le(out, data_bytes, 4);
    for (std::int16_t s : samples) put_le(out, static_cast<std::uint16_t>(s), 2);
    return out;
}

void write_wav(const std::filesystem::path& path, std::span<const std::int16_t> samples, int sample_rate) {
    const auto bytes = encode_wav(samples, sample_rate);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + path.string());
}

}  // namespace streamtts
