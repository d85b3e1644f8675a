#include "streamtts/acoustic_model.hpp"

#include <chrono>
#include <string>

#include "streamtts/errors.hpp"
#include "streamtts/model_bundle.hpp"

namespace streamtts {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Vec concat(std::span<const float> a, std::span<const float> b) {
    Vec out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

LinearParams linear_from(const ModelBundle& b, const std::string& name) {
    LinearParams p{b.tensor(name + ".weight"), b.tensor(name + ".bias").data};
    p.validate(name);
    return p;
}

GruParams gru_from(const ModelBundle& b, const std::string& name) {
    GruParams p{b.tensor(name + ".w_ih"), b.tensor(name + ".w_hh"), b.tensor(name + ".bias").data};
    p.validate(name);
    return p;
}

LstmParams lstm_from(const ModelBundle& b, const std::string& name) {
    LstmParams p{b.tensor(name + ".w_ih"), b.tensor(name + ".w_hh"), b.tensor(name + ".bias").data};
    p.validate(name);
    return p;
}

Vec prenet(std::span<const float> x, const LinearParams& first, const LinearParams& second) {
    Vec h = linear_forward(x, first);
    apply_activation(h, Activation::Relu);
    Vec out = linear_forward(h, second);
    apply_activation(out, Activation::Relu);
    return out;
}

void require_finite(std::span<const float> values, const char* what) {
    if (!all_finite(values)) throw NumericError(std::string("non-finite values in ") + what);
}

}  // namespace

BiGruEncoderBody::BiGruEncoderBody(GruParams forward_params, GruParams backward_params)
    : fwd_(std::move(forward_params)), bwd_(std::move(backward_params)) {
    fwd_.validate("encoder.gru_fwd");
    bwd_.validate("encoder.gru_bwd");
    if (fwd_.input_dim() != bwd_.input_dim()) throw ConfigError("encoder GRU directions disagree on input width");
}

Tensor2 BiGruEncoderBody::forward(const Tensor2& inputs) const {
    const std::size_t n = inputs.rows;
    const std::size_t hf = fwd_.hidden_dim();
    const std::size_t hb = bwd_.hidden_dim();
    Tensor2 out(n, hf + hb);
    // Input-side products don't depend on the recurrence, and input rows repeat
    // whenever a phoneme does, so compute them once per distinct row.
    const DistinctRows distinct = distinct_rows(inputs);
    const Tensor2 proj_f = project_rows(distinct.unique, fwd_.w_ih);
    const Tensor2 proj_b = project_rows(distinct.unique, bwd_.w_ih);
    Vec h(hf, 0.0f);
    for (std::size_t t = 0; t < n; ++t) {
        h = gru_cell_step_projected(proj_f.row(distinct.index[t]), h, fwd_);
        std::copy(h.begin(), h.end(), out.row(t).begin());
    }
    h.assign(hb, 0.0f);
    for (std::size_t t = n; t-- > 0;) {
        h = gru_cell_step_projected(proj_b.row(distinct.index[t]), h, bwd_);
        std::copy(h.begin(), h.end(), out.row(t).begin() + static_cast<std::ptrdiff_t>(hf));
    }
    return out;
}

AcousticModel::AcousticModel(ArchConfig arch, std::shared_ptr<const AcousticWeights> weights,
                             std::shared_ptr<const Postnet> postnet)
    : arch_(arch), weights_(std::move(weights)), postnet_(std::move(postnet)) {
    arch_.validate();
    if (!weights_ || !postnet_ || !weights_->encoder_body) throw ConfigError("AcousticModel: missing weights");
    if (weights_->encoder_body->output_dim() != static_cast<std::size_t>(arch_.memory_dim())) {
        throw ConfigError("encoder body output width " + std::to_string(weights_->encoder_body->output_dim()) +
                          " does not match memory_dim " + std::to_string(arch_.memory_dim()));
    }
    if (weights_->frame_proj.out_dim() < static_cast<std::size_t>(arch_.frames_per_step * arch_.frame_dim)) {
        throw ConfigError("frame projection too small for frames_per_step " + std::to_string(arch_.frames_per_step));
    }
}

AcousticModel AcousticModel::from_bundle(const ModelBundle& bundle) {
    validate_bundle(bundle);
    auto w = std::make_shared<AcousticWeights>();
    w->embedding = EmbeddingTable{bundle.tensor("embedding")};
    w->enc_prenet1 = linear_from(bundle, "encoder.prenet1");
    w->enc_prenet2 = linear_from(bundle, "encoder.prenet2");
    w->encoder_body = std::make_shared<BiGruEncoderBody>(gru_from(bundle, "encoder.gru_fwd"),
                                                         gru_from(bundle, "encoder.gru_bwd"));
    w->dec_prenet1 = linear_from(bundle, "decoder.prenet1");
    w->dec_prenet2 = linear_from(bundle, "decoder.prenet2");
    w->attn_gru = gru_from(bundle, "decoder.attn_gru");
    w->attention = AttentionParams{linear_from(bundle, "attention.hidden"), linear_from(bundle, "attention.output")};
    w->attention.validate();
    w->input_proj = linear_from(bundle, "decoder.input_proj");
    w->lstm1 = lstm_from(bundle, "decoder.lstm1");
    w->lstm2 = lstm_from(bundle, "decoder.lstm2");
    w->frame_proj = linear_from(bundle, "decoder.frame_proj");
    w->stop_proj = linear_from(bundle, "decoder.stop_proj");
    return AcousticModel(bundle.arch, std::move(w), std::make_shared<Postnet>(Postnet::from_bundle(bundle)));
}

AcousticModel AcousticModel::with_settings(const DecodeSettings& settings) const {
    ArchConfig arch = arch_;
    if (settings.frames_per_step) arch.frames_per_step = *settings.frames_per_step;
    if (settings.max_steps) arch.max_steps = *settings.max_steps;
    if (settings.stop_threshold) arch.stop_threshold = *settings.stop_threshold;
    return AcousticModel(arch, weights_, postnet_);
}

AcousticModel AcousticModel::with_encoder_body(std::shared_ptr<const EncoderBody> body) const {
    auto w = std::make_shared<AcousticWeights>(*weights_);
    w->encoder_body = std::move(body);
    return AcousticModel(arch_, std::move(w), postnet_);
}

EncoderMemory encode(std::span<const std::int32_t> phoneme_ids, const AcousticModel& model) {
    if (phoneme_ids.empty()) throw InputError("empty phoneme sequence");
    const AcousticWeights& w = model.weights();
    const Tensor2 embedded = embedding_lookup(phoneme_ids, w.embedding);
    // The pre-net is a per-row function, so run it once per distinct phoneme.
    const DistinctRows distinct = distinct_rows(embedded);
    Tensor2 hidden = linear_forward_rows(distinct.unique, w.enc_prenet1);
    apply_activation(hidden.data, Activation::Relu);
    Tensor2 pre_unique = linear_forward_rows(hidden, w.enc_prenet2);
    apply_activation(pre_unique.data, Activation::Relu);
    Tensor2 pre(embedded.rows, pre_unique.cols);
    for (std::size_t t = 0; t < pre.rows; ++t) {
        const auto src = pre_unique.row(distinct.index[t]);
        std::copy(src.begin(), src.end(), pre.row(t).begin());
    }
    EncoderMemory memory{w.encoder_body->forward(pre)};
    require_finite(memory.vectors.data, "encoder memory");
    return memory;
}

DecoderState initial_decoder_state(const AcousticModel& model) {
    const ArchConfig& a = model.arch();
    DecoderState s;
    s.attn_h.assign(static_cast<std::size_t>(a.attn_rnn_dim), 0.0f);
    s.lstm1 = LstmState{Vec(static_cast<std::size_t>(a.dec_lstm_dim), 0.0f), Vec(static_cast<std::size_t>(a.dec_lstm_dim), 0.0f)};
    s.lstm2 = s.lstm1;
    s.attention = initial_attention_state(static_cast<std::size_t>(a.num_mixtures), static_cast<std::size_t>(a.memory_dim()));
    s.prev_frame.assign(static_cast<std::size_t>(a.frame_dim), 0.0f);
    s.step_index = 0;
    return s;
}

DecoderStepResult decoder_step(const DecoderState& state, const EncoderMemory& memory, const AcousticModel& model) {
    const AcousticWeights& w = model.weights();
    const auto r = static_cast<std::size_t>(model.frames_per_step());
    const auto frame_dim = static_cast<std::size_t>(model.arch().frame_dim);
    if (memory.length() == 0 || memory.dim() != static_cast<std::size_t>(model.arch().memory_dim())) {
        throw ConfigError("decoder_step: encoder memory shape does not match the model");
    }

    DecoderStepResult out;
    DecoderState& next = out.state;

    // 1. pre-net(previous frame) + previous context -> attention GRU
    const Vec pre = prenet(state.prev_frame, w.dec_prenet1, w.dec_prenet2);
    next.attn_h = gru_cell_step(concat(pre, state.attention.context), state.attn_h, w.attn_gru);

    // 2. mixture update, alignment, context
    next.attention = advance_state(next.attn_h, state.attention, w.attention);
    const Vec alignment = compute_alignment(next.attention, memory.length());
    next.attention.context = compute_context(alignment, memory.vectors);

    // 3. two residual LSTMs over the projected [h, context]
    const Vec projected = linear_forward(concat(next.attn_h, next.attention.context), w.input_proj);
    next.lstm1 = lstm_cell_step(projected, state.lstm1.h, state.lstm1.c, w.lstm1);
    Vec x1(projected.size());
    for (std::size_t i = 0; i < x1.size(); ++i) x1[i] = projected[i] + next.lstm1.h[i];
    next.lstm2 = lstm_cell_step(x1, state.lstm2.h, state.lstm2.c, w.lstm2);
    Vec x2(x1.size());
    for (std::size_t i = 0; i < x2.size(); ++i) x2[i] = x1[i] + next.lstm2.h[i];
    require_finite(x2, "decoder output");

    // 4. r frames from the first 22r rows of the projection
    out.frames = Tensor2(r, frame_dim);
    for (std::size_t row = 0; row < r * frame_dim; ++row) {
        out.frames.data[row] = dot(w.frame_proj.weight.row(row), x2) + w.frame_proj.bias[row];
    }
    require_finite(out.frames.data, "decoder frames");

    // 5. one stop decision per step
    out.stop_prob = sigmoid(dot(w.stop_proj.weight.row(0), x2) + w.stop_proj.bias[0]);

    const auto last = out.frames.row(r - 1);
    next.prev_frame.assign(last.begin(), last.end());
    next.step_index = state.step_index + 1;
    return out;
}

bool should_stop(float stop_prob, int step_index, const ArchConfig& cfg) {
    return stop_prob > cfg.stop_threshold || (cfg.max_steps > 0 && step_index >= cfg.max_steps);
}

BatchResult run_batch(std::span<const std::int32_t> phoneme_ids, const AcousticModel& model) {
    BatchResult result;
    auto t0 = Clock::now();
    const EncoderMemory memory = encode(phoneme_ids, model);
    result.encoder_ms = ms_since(t0);

    ArchConfig limits = model.arch();
    limits.max_steps = limits.resolve_max_steps(phoneme_ids.size());

    t0 = Clock::now();
    DecoderState state = initial_decoder_state(model);
    result.decoder_frames = Tensor2(0, static_cast<std::size_t>(limits.frame_dim));
    for (;;) {
        DecoderStepResult step = decoder_step(state, memory, model);
        result.decoder_frames.append_rows(step.frames);
        state = std::move(step.state);
        if (should_stop(step.stop_prob, state.step_index, limits)) {
            result.truncated = !(step.stop_prob > limits.stop_threshold);
            break;
        }
    }
    result.steps = state.step_index;
    result.decoder_ms = ms_since(t0);

    t0 = Clock::now();
    result.frames = refine_sequence(result.decoder_frames, model.postnet());
    result.postnet_ms = ms_since(t0);
    return result;
}

}  // namespace streamtts
