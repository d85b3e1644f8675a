#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "streamtts/config.hpp"
#include "streamtts/tensor.hpp"

// Model container ("SSTTSM01"):
//
//   offset 0   8 bytes   magic "SSTTSM01"
//   offset 8   4 bytes   header length H, little-endian uint32
//   offset 12  H bytes   UTF-8 JSON: {"arch": {...}, "postnet": {...},
//                        "tensors": [{"name", "shape": [rows, cols], "offset"}...],
//                        "payload_bytes": N}
//   offset 12+H          payload, little-endian float32, tensor offsets relative to here
//
// Vectors (biases) are stored as 1 x n tensors.

namespace streamtts {

inline constexpr char kModelMagic[9] = "SSTTSM01";

struct TensorSpec {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

struct ModelBundle {
    ArchConfig arch;
    PostnetConfig postnet;
    std::map<std::string, Tensor2> tensors;

    /// Throws ConfigError naming the tensor when it is absent.
    const Tensor2& tensor(const std::string& name) const;
};

/// Every tensor the architecture needs, with its exact shape.
std::vector<TensorSpec> required_tensors(const ArchConfig& arch, const PostnetConfig& postnet);

/// Checks configs and that the tensor map matches required_tensors() exactly.
/// Throws LoadError naming the offending tensor.
void validate_bundle(const ModelBundle& bundle);

std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle);
ModelBundle parse_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

/// Deterministic weights: tensor `name` draws from SplitMix64(seed ^ fnv1a64(name)),
/// value i = float(-0.05 + 0.1 * u_i) with u_i = (next() >> 11) * 2^-53, row-major.
ModelBundle genmodel(std::uint64_t seed, const ArchConfig& arch, const PostnetConfig& postnet = {});

/// One tensor's worth of the genmodel stream.
std::vector<float> seeded_uniform(std::uint64_t seed, const std::string& name, std::size_t count);

bool bit_equal(const ModelBundle& a, const ModelBundle& b);

}  // namespace streamtts
