#pragma once

#include <cstdint>
#include <string_view>

namespace streamtts {

/// splitmix64 (Steele, Lea, Flood). Small, fast, and easy to reproduce in any language.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Top 53 bits scaled into [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). Modulo bias is irrelevant at the bounds used here.
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

private:
    std::uint64_t state_;
};

/// 64-bit FNV-1a over the bytes of `text`.
constexpr std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char ch : text) {
        h ^= static_cast<std::uint8_t>(ch);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace streamtts
