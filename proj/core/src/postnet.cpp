#include "streamtts/postnet.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "streamtts/errors.hpp"
#include "streamtts/model_bundle.hpp"

namespace streamtts {

Postnet::Postnet(PostnetConfig cfg, std::vector<Conv1dParams> layers) : cfg_(cfg), layers_(std::move(layers)) {
    cfg_.validate();
    if (layers_.size() != static_cast<std::size_t>(cfg_.n_layers)) {
        throw ConfigError("postnet: expected " + std::to_string(cfg_.n_layers) + " layers, got " +
                          std::to_string(layers_.size()));
    }
    std::size_t channels = static_cast<std::size_t>(cfg_.channels);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        const std::string name = "postnet.conv" + std::to_string(i + 1);
        layer.validate(name);
        if (layer.kernel_size != static_cast<std::size_t>(cfg_.kernel_size) || layer.in_channels != channels) {
            throw ConfigError(name + ": kernel or input channels disagree with config");
        }
        channels = layer.out_channels;
    }
    if (channels != static_cast<std::size_t>(cfg_.channels)) throw ConfigError("postnet: output channels must be 22");
}

Postnet Postnet::from_bundle(const ModelBundle& bundle) {
    const PostnetConfig& cfg = bundle.postnet;
    cfg.validate();
    std::vector<Conv1dParams> layers;
    for (int i = 0; i < cfg.n_layers; ++i) {
        const std::string name = "postnet.conv" + std::to_string(i + 1);
        Conv1dParams conv;
        conv.kernel_size = static_cast<std::size_t>(cfg.kernel_size);
        conv.in_channels = static_cast<std::size_t>(i == 0 ? cfg.channels : cfg.hidden_channels);
        conv.out_channels = static_cast<std::size_t>(i + 1 == cfg.n_layers ? cfg.channels : cfg.hidden_channels);
        conv.weight = bundle.tensor(name + ".weight");
        conv.bias = bundle.tensor(name + ".bias").data;
        layers.push_back(std::move(conv));
    }
    return Postnet(cfg, std::move(layers));
}

Tensor2 Postnet::residual(const Tensor2& window, std::size_t span_first, std::size_t span_last) const {
    if (window.cols != static_cast<std::size_t>(cfg_.channels)) {
        throw ConfigError("postnet: window has " + std::to_string(window.cols) + " channels");
    }
    if (span_first > span_last || span_last > window.rows) throw std::logic_error("postnet: span outside window");

    const auto len = static_cast<std::ptrdiff_t>(window.rows);
    const auto lo = static_cast<std::ptrdiff_t>(span_first);
    const auto hi = static_cast<std::ptrdiff_t>(span_last);
    const auto n = static_cast<std::ptrdiff_t>(layers_.size());

    const Tensor2* current = &window;
    std::ptrdiff_t current_first = 0;
    Tensor2 activations;
    for (std::ptrdiff_t l = 0; l < n; ++l) {
        const auto& conv = layers_[static_cast<std::size_t>(l)];
        // Later layers still need this many extra rows on each side.
        const std::ptrdiff_t reach = static_cast<std::ptrdiff_t>(conv.half_width()) * (n - 1 - l);
        const std::ptrdiff_t out_first = std::max<std::ptrdiff_t>(0, lo - reach);
        const std::ptrdiff_t out_last = std::min<std::ptrdiff_t>(len, hi + reach);
        Tensor2 next = conv1d_window(*current, current_first, len, out_first, out_last, conv);
        if (l + 1 < n) apply_activation(next.data, Activation::Tanh);
        activations = std::move(next);
        current = &activations;
        current_first = out_first;
    }
    return activations;
}

Tensor2 postnet_forward(const Tensor2& frames, const Postnet& postnet) {
    if (frames.rows == 0) throw InputError("postnet needs at least one frame");
    return postnet.residual(frames, 0, frames.rows);
}

Tensor2 refine_sequence(const Tensor2& frames, const Postnet& postnet) {
    Tensor2 out = postnet_forward(frames, postnet);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = frames.data[i] + out.data[i];
    return out;
}

Tensor2 refine_chunk(const Postnet& postnet, const Tensor2& buffered, const ChunkPlan& plan,
                     std::size_t half_window) {
    if (plan.end <= plan.start) throw std::logic_error("refine_chunk: empty span");
    if (buffered.rows != plan.window_size()) {
        throw std::logic_error("refine_chunk: window has " + std::to_string(buffered.rows) + " rows, plan needs " +
                               std::to_string(plan.window_size()));
    }
    if (!plan.reaches_start() && plan.left_ctx < half_window) {
        throw std::logic_error("refine_chunk: chunk at " + std::to_string(plan.start) + " has only " +
                               std::to_string(plan.left_ctx) + " frames of left context");
    }
    if (!plan.reaches_end && plan.right_ctx < half_window) {
        throw std::logic_error("refine_chunk: chunk ending at " + std::to_string(plan.end) + " has only " +
                               std::to_string(plan.right_ctx) + " frames of right context");
    }
    const std::size_t first = plan.left_ctx;
    Tensor2 out = postnet.residual(buffered, first, first + plan.span());
    const float* raw = buffered.data.data() + first * buffered.cols;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = raw[i] + out.data[i];
    return out;
}

}  // namespace streamtts
