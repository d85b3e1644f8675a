#include "streamtts/model_bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "streamtts/errors.hpp"
#include "streamtts/splitmix64.hpp"

namespace streamtts {

using nlohmann::json;

const Tensor2& ModelBundle::tensor(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ConfigError("model has no tensor '" + name + "'");
    return it->second;
}

std::vector<TensorSpec> required_tensors(const ArchConfig& a, const PostnetConfig& p) {
    using S = std::size_t;
    std::vector<TensorSpec> specs;
    auto linear = [&](const std::string& name, S out, S in) {
        specs.push_back({name + ".weight", out, in});
        specs.push_back({name + ".bias", 1, out});
    };
    auto rnn = [&](const std::string& name, S gates, S hidden, S in) {
        specs.push_back({name + ".w_ih", gates * hidden, in});
        specs.push_back({name + ".w_hh", gates * hidden, hidden});
        specs.push_back({name + ".bias", 1, gates * hidden});
    };
    const S mem = static_cast<S>(a.memory_dim());
    specs.push_back({"embedding", S(a.vocab_size), S(a.embed_dim)});
    linear("encoder.prenet1", S(a.enc_prenet[0]), S(a.embed_dim));
    linear("encoder.prenet2", S(a.enc_prenet[1]), S(a.enc_prenet[0]));
    rnn("encoder.gru_fwd", 3, S(a.enc_rnn_dim), S(a.enc_prenet[1]));
    rnn("encoder.gru_bwd", 3, S(a.enc_rnn_dim), S(a.enc_prenet[1]));
    linear("decoder.prenet1", S(a.dec_prenet[0]), S(a.frame_dim));
    linear("decoder.prenet2", S(a.dec_prenet[1]), S(a.dec_prenet[0]));
    rnn("decoder.attn_gru", 3, S(a.attn_rnn_dim), S(a.dec_prenet[1]) + mem);
    linear("attention.hidden", S(a.attn_mlp_dim), S(a.attn_rnn_dim));
    linear("attention.output", 3 * S(a.num_mixtures), S(a.attn_mlp_dim));
    linear("decoder.input_proj", S(a.dec_lstm_dim), S(a.attn_rnn_dim) + mem);
    rnn("decoder.lstm1", 4, S(a.dec_lstm_dim), S(a.dec_lstm_dim));
    rnn("decoder.lstm2", 4, S(a.dec_lstm_dim), S(a.dec_lstm_dim));
    linear("decoder.frame_proj", S(a.frame_dim) * S(a.max_frames_per_step), S(a.dec_lstm_dim));
    linear("decoder.stop_proj", 1, S(a.dec_lstm_dim));
    for (int i = 0; i < p.n_layers; ++i) {
        const S in = i == 0 ? S(p.channels) : S(p.hidden_channels);
        const S out = i + 1 == p.n_layers ? S(p.channels) : S(p.hidden_channels);
        linear("postnet.conv" + std::to_string(i + 1), out, in * S(p.kernel_size));
    }
    return specs;
}

namespace {

std::string shape_str(std::size_t rows, std::size_t cols) {
    return "[" + std::to_string(rows) + ", " + std::to_string(cols) + "]";
}

json arch_to_json(const ArchConfig& a) {
    return json{{"vocab_size", a.vocab_size},
                {"embed_dim", a.embed_dim},
                {"enc_prenet", a.enc_prenet},
                {"enc_rnn_dim", a.enc_rnn_dim},
                {"dec_prenet", a.dec_prenet},
                {"attn_rnn_dim", a.attn_rnn_dim},
                {"attn_mlp_dim", a.attn_mlp_dim},
                {"dec_lstm_dim", a.dec_lstm_dim},
                {"num_mixtures", a.num_mixtures},
                {"frame_dim", a.frame_dim},
                {"frames_per_step", a.frames_per_step},
                {"max_frames_per_step", a.max_frames_per_step},
                {"max_steps", a.max_steps},
                {"stop_threshold", a.stop_threshold}};
}

ArchConfig arch_from_json(const json& j) {
    ArchConfig a;
    j.at("vocab_size").get_to(a.vocab_size);
    j.at("embed_dim").get_to(a.embed_dim);
    j.at("enc_prenet").get_to(a.enc_prenet);
    j.at("enc_rnn_dim").get_to(a.enc_rnn_dim);
    j.at("dec_prenet").get_to(a.dec_prenet);
    j.at("attn_rnn_dim").get_to(a.attn_rnn_dim);
    j.at("attn_mlp_dim").get_to(a.attn_mlp_dim);
    j.at("dec_lstm_dim").get_to(a.dec_lstm_dim);
    j.at("num_mixtures").get_to(a.num_mixtures);
    j.at("frame_dim").get_to(a.frame_dim);
    j.at("frames_per_step").get_to(a.frames_per_step);
    j.at("max_frames_per_step").get_to(a.max_frames_per_step);
    j.at("max_steps").get_to(a.max_steps);
    j.at("stop_threshold").get_to(a.stop_threshold);
    return a;
}

json postnet_to_json(const PostnetConfig& p) {
    return json{{"n_layers", p.n_layers},
                {"kernel_size", p.kernel_size},
                {"hidden_channels", p.hidden_channels},
                {"channels", p.channels}};
}

PostnetConfig postnet_from_json(const json& j) {
    PostnetConfig p;
    j.at("n_layers").get_to(p.n_layers);
    j.at("kernel_size").get_to(p.kernel_size);
    j.at("hidden_channels").get_to(p.hidden_channels);
    j.at("channels").get_to(p.channels);
    return p;
}

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32_le(std::vector<std::uint8_t>& out, float v) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    put_u32_le(out, bits);
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

}  // namespace

void validate_bundle(const ModelBundle& bundle) {
    try {
        bundle.arch.validate();
        bundle.postnet.validate();
    } catch (const ConfigError& e) {
        throw LoadError(std::string("invalid config: ") + e.what());
    }
    const auto specs = required_tensors(bundle.arch, bundle.postnet);
    for (const auto& spec : specs) {
        auto it = bundle.tensors.find(spec.name);
        if (it == bundle.tensors.end()) throw LoadError("missing tensor '" + spec.name + "'");
        const Tensor2& t = it->second;
        if (t.rows != spec.rows || t.cols != spec.cols || t.data.size() != spec.rows * spec.cols) {
            throw LoadError("shape mismatch for tensor '" + spec.name + "': expected " +
                            shape_str(spec.rows, spec.cols) + ", got " + shape_str(t.rows, t.cols));
        }
    }
    if (bundle.tensors.size() != specs.size()) {
        for (const auto& [name, t] : bundle.tensors) {
            bool known = false;
            for (const auto& spec : specs) known = known || spec.name == name;
            if (!known) throw LoadError("unexpected tensor '" + name + "'");
        }
    }
}

std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle) {
    validate_bundle(bundle);
    json header;
    header["arch"] = arch_to_json(bundle.arch);
    header["postnet"] = postnet_to_json(bundle.postnet);
    json entries = json::array();
    std::size_t offset = 0;
    for (const auto& [name, t] : bundle.tensors) {
        entries.push_back(json{{"name", name}, {"shape", {t.rows, t.cols}}, {"offset", offset}});
        offset += t.data.size() * sizeof(float);
    }
    header["tensors"] = std::move(entries);
    header["payload_bytes"] = offset;
    const std::string text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(12 + text.size() + offset);
    out.insert(out.end(), kModelMagic, kModelMagic + 8);
    put_u32_le(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& [name, t] : bundle.tensors) {
        if constexpr (std::endian::native == std::endian::little) {
            const auto* raw = reinterpret_cast<const std::uint8_t*>(t.data.data());
            out.insert(out.end(), raw, raw + t.data.size() * sizeof(float));
        } else {
            for (float v : t.data) put_f32_le(out, v);
        }
    }
    return out;
}

ModelBundle parse_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kModelMagic, 8) != 0) throw LoadError("bad magic");
    if (bytes.size() < 12) throw LoadError("truncated header");
    const std::uint32_t header_len = get_u32_le(bytes.data() + 8);
    if (bytes.size() - 12 < header_len) throw LoadError("truncated header");

    json header;
    try {
        header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
    } catch (const json::exception& e) {
        throw LoadError(std::string("malformed header: ") + e.what());
    }

    const std::uint8_t* payload = bytes.data() + 12 + header_len;
    const std::size_t payload_len = bytes.size() - 12 - header_len;

    ModelBundle bundle;
    try {
        bundle.arch = arch_from_json(header.at("arch"));
        bundle.postnet = postnet_from_json(header.at("postnet"));
        for (const auto& entry : header.at("tensors")) {
            const auto name = entry.at("name").get<std::string>();
            const auto& shape = entry.at("shape");
            if (!shape.is_array() || shape.size() != 2) throw LoadError("tensor '" + name + "' has a malformed shape");
            const auto rows = shape[0].get<std::size_t>();
            const auto cols = shape[1].get<std::size_t>();
            const auto offset = entry.at("offset").get<std::size_t>();
            const std::size_t nbytes = rows * cols * sizeof(float);
            if (offset > payload_len || payload_len - offset < nbytes) {
                throw LoadError("truncated payload in tensor '" + name + "'");
            }
            Tensor2 t(rows, cols);
            if constexpr (std::endian::native == std::endian::little) {
                std::memcpy(t.data.data(), payload + offset, nbytes);
            } else {
                for (std::size_t i = 0; i < t.data.size(); ++i) {
                    t.data[i] = std::bit_cast<float>(get_u32_le(payload + offset + 4 * i));
                }
            }
            if (!bundle.tensors.emplace(name, std::move(t)).second) {
                throw LoadError("duplicate tensor '" + name + "'");
            }
        }
    } catch (const json::exception& e) {
        throw LoadError(std::string("malformed header: ") + e.what());
    }
    validate_bundle(bundle);
    return bundle;
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
    const auto bytes = serialize_model(bundle);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + path.string());
}

ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open model file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_model(bytes);
}

std::vector<float> seeded_uniform(std::uint64_t seed, const std::string& name, std::size_t count) {
    SplitMix64 rng(seed ^ fnv1a64(name));
    std::vector<float> values(count);
    for (float& v : values) v = static_cast<float>(-0.05 + 0.1 * rng.uniform01());
    return values;
}

ModelBundle genmodel(std::uint64_t seed, const ArchConfig& arch, const PostnetConfig& postnet) {
    arch.validate();
    postnet.validate();
    ModelBundle bundle{arch, postnet, {}};
    for (const auto& spec : required_tensors(arch, postnet)) {
        Tensor2 t(spec.rows, spec.cols);
        t.data = seeded_uniform(seed, spec.name, spec.rows * spec.cols);
        bundle.tensors.emplace(spec.name, std::move(t));
    }
    return bundle;
}

bool bit_equal(const ModelBundle& a, const ModelBundle& b) {
    if (!(a.arch == b.arch) || !(a.postnet == b.postnet) || a.tensors.size() != b.tensors.size()) return false;
    for (const auto& [name, t] : a.tensors) {
        auto it = b.tensors.find(name);
        if (it == b.tensors.end() || !bit_equal(t, it->second)) return false;
    }
    return true;
}

}  // namespace streamtts
