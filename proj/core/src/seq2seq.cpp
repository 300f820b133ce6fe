#include "dobf/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dobf/errors.hpp"

namespace dobf {
namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Fixed 53-bit mapping, independent of the standard library's
// uniform_real_distribution so that draws are identical on every platform.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

struct StepCache {
    int token = -1;
    std::vector<double> gate_i, gate_f, gate_g, gate_o;  // H each
    std::vector<double> tanh_c;                          // H
};

// One LSTM step. h and c are updated in place; gates cached when cache
// is non-null. Kernel rows are one-hot selected by `token`.
void lstm_step(std::span<const float> input_kernel, std::span<const float> recurrent_kernel,
               std::span<const float> bias, int hidden, int token, std::vector<double>& h,
               std::vector<double>& c, StepCache* cache) {
    const int four_h = 4 * hidden;
    std::vector<double> z(four_h);
    for (int j = 0; j < four_h; ++j) {
        z[j] = static_cast<double>(bias[j]) +
               static_cast<double>(input_kernel[static_cast<std::size_t>(token) * four_h + j]);
    }
    for (int k = 0; k < hidden; ++k) {
        const double hk = h[k];
        if (hk == 0.0) continue;
        const float* row = recurrent_kernel.data() + static_cast<std::size_t>(k) * four_h;
        for (int j = 0; j < four_h; ++j) z[j] += hk * static_cast<double>(row[j]);
    }

    if (cache) {
        cache->token = token;
        cache->gate_i.resize(hidden);
        cache->gate_f.resize(hidden);
        cache->gate_g.resize(hidden);
        cache->gate_o.resize(hidden);
        cache->tanh_c.resize(hidden);
    }

    for (int k = 0; k < hidden; ++k) {
        const double gi = sigmoid(z[k]);
        const double gf = sigmoid(z[hidden + k]);
        const double gg = std::tanh(z[2 * hidden + k]);
        const double go = sigmoid(z[3 * hidden + k]);
        c[k] = gf * c[k] + gi * gg;
        const double tc = std::tanh(c[k]);
        h[k] = go * tc;
        if (cache) {
            cache->gate_i[k] = gi;
            cache->gate_f[k] = gf;
            cache->gate_g[k] = gg;
            cache->gate_o[k] = go;
            cache->tanh_c[k] = tc;
        }
    }
}

void check_token(int token, int vocab, const char* what) {
    if (token < 0 || token >= vocab) {
        throw std::out_of_range(std::string(what) + " token " + std::to_string(token) +
                                " outside vocabulary of size " + std::to_string(vocab));
    }
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t v = 0; v < logits.size(); ++v) {
        probs[v] = std::exp(logits[v] - max_logit);
        sum += probs[v];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

std::vector<double> project(const ModelWeights& w, const std::vector<double>& h) {
    std::vector<double> logits(w.output_vocab);
    for (int v = 0; v < w.output_vocab; ++v) logits[v] = static_cast<double>(w.proj_bias[v]);
    for (int k = 0; k < w.hidden; ++k) {
        const double hk = h[k];
        if (hk == 0.0) continue;
        const float* row = w.proj_kernel.data() + static_cast<std::size_t>(k) * w.output_vocab;
        for (int v = 0; v < w.output_vocab; ++v) logits[v] += hk * static_cast<double>(row[v]);
    }
    return logits;
}

// Everything the backward pass needs from one teacher-forced forward run.
struct ForwardTrace {
    // hidden/cell sequences include the initial state at index 0
    std::vector<std::vector<double>> enc_h, enc_c, dec_h, dec_c;
    std::vector<StepCache> enc_steps, dec_steps;
    std::vector<std::vector<double>> dec_probs;  // per decoder step
    std::vector<int> dec_targets;
    double loss = 0.0;
};

ForwardTrace run_forward(const ModelWeights& w, const IndexSequence& input,
                         const IndexSequence& framed_target) {
    if (framed_target.indices.size() < 2) {
        throw std::invalid_argument("framed target must contain at least the two markers");
    }
    const int hidden = w.hidden;

    ForwardTrace trace;
    std::vector<double> h(hidden, 0.0), c(hidden, 0.0);

    trace.enc_h.push_back(h);
    trace.enc_c.push_back(c);
    trace.enc_steps.resize(input.indices.size());
    for (std::size_t t = 0; t < input.indices.size(); ++t) {
        check_token(input.indices[t], w.input_vocab, "encoder");
        lstm_step(w.enc_input_kernel, w.enc_recurrent_kernel, w.enc_bias, hidden,
                  input.indices[t], h, c, &trace.enc_steps[t]);
        trace.enc_h.push_back(h);
        trace.enc_c.push_back(c);
    }

    const std::size_t steps = framed_target.indices.size() - 1;
    trace.dec_h.push_back(h);
    trace.dec_c.push_back(c);
    trace.dec_steps.resize(steps);
    trace.dec_probs.resize(steps);
    trace.dec_targets.resize(steps);

    double total = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        const int in_token = framed_target.indices[t];
        const int target = framed_target.indices[t + 1];
        check_token(in_token, w.output_vocab, "decoder");
        check_token(target, w.output_vocab, "target");
        lstm_step(w.dec_input_kernel, w.dec_recurrent_kernel, w.dec_bias, hidden, in_token, h, c,
                  &trace.dec_steps[t]);
        trace.dec_h.push_back(h);
        trace.dec_c.push_back(c);

        const std::vector<double> logits = project(w, h);
        const double max_logit = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        auto& probs = trace.dec_probs[t];
        probs.resize(logits.size());
        for (std::size_t v = 0; v < logits.size(); ++v) {
            probs[v] = std::exp(logits[v] - max_logit);
            sum += probs[v];
        }
        for (double& p : probs) p /= sum;
        total += -(logits[target] - max_logit - std::log(sum));
        trace.dec_targets[t] = target;
    }
    trace.loss = total / static_cast<double>(steps);
    return trace;
}

// Backward through one LSTM step. dh/dc enter as gradients at the step's
// output and leave as gradients at its input state.
void lstm_backward_step(const StepCache& cache, const std::vector<double>& h_prev,
                        const std::vector<double>& c_prev, std::span<const float> recurrent_kernel,
                        int hidden, std::vector<double>& dh, std::vector<double>& dc,
                        std::vector<double>& d_input_kernel, std::vector<double>& d_recurrent,
                        std::vector<double>& d_bias) {
    const int four_h = 4 * hidden;
    std::vector<double> dz(four_h);
    for (int k = 0; k < hidden; ++k) {
        const double gi = cache.gate_i[k];
        const double gf = cache.gate_f[k];
        const double gg = cache.gate_g[k];
        const double go = cache.gate_o[k];
        const double tc = cache.tanh_c[k];

        const double d_out = dh[k] * tc;
        dc[k] += dh[k] * go * (1.0 - tc * tc);

        const double d_f = dc[k] * c_prev[k];
        const double d_i = dc[k] * gg;
        const double d_g = dc[k] * gi;

        dz[k] = d_i * gi * (1.0 - gi);
        dz[hidden + k] = d_f * gf * (1.0 - gf);
        dz[2 * hidden + k] = d_g * (1.0 - gg * gg);
        dz[3 * hidden + k] = d_out * go * (1.0 - go);

        dc[k] *= gf;  // becomes dc_prev
    }

    for (int j = 0; j < four_h; ++j) d_bias[j] += dz[j];
    {
        double* row = d_input_kernel.data() + static_cast<std::size_t>(cache.token) * four_h;
        for (int j = 0; j < four_h; ++j) row[j] += dz[j];
    }
    for (int k = 0; k < hidden; ++k) {
        const double hk = h_prev[k];
        double* drow = d_recurrent.data() + static_cast<std::size_t>(k) * four_h;
        const float* rrow = recurrent_kernel.data() + static_cast<std::size_t>(k) * four_h;
        double acc = 0.0;
        for (int j = 0; j < four_h; ++j) {
            drow[j] += hk * dz[j];
            acc += static_cast<double>(rrow[j]) * dz[j];
        }
        dh[k] = acc;  // becomes dh_prev
    }
}

}  // namespace

void Seq2SeqConfig::validate() const {
    if (hidden_size < 1) throw std::invalid_argument("hidden_size must be positive");
    if (max_decode_len < 1) throw std::invalid_argument("max_decode_len must be positive");
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
    if (max_iterations < 0) throw std::invalid_argument("max_iterations must be non-negative");
    if (check_interval < 1) throw std::invalid_argument("check_interval must be positive");
}

ModelWeights ModelWeights::zeros(int input_vocab, int hidden, int output_vocab) {
    if (input_vocab < 0 || hidden < 1 || output_vocab < 1) {
        throw std::invalid_argument("bad model dimensions");
    }
    ModelWeights w;
    w.input_vocab = input_vocab;
    w.hidden = hidden;
    w.output_vocab = output_vocab;
    const std::size_t four_h = 4u * hidden;
    w.enc_input_kernel.assign(static_cast<std::size_t>(input_vocab) * four_h, 0.0f);
    w.enc_recurrent_kernel.assign(static_cast<std::size_t>(hidden) * four_h, 0.0f);
    w.enc_bias.assign(four_h, 0.0f);
    w.dec_input_kernel.assign(static_cast<std::size_t>(output_vocab) * four_h, 0.0f);
    w.dec_recurrent_kernel.assign(static_cast<std::size_t>(hidden) * four_h, 0.0f);
    w.dec_bias.assign(four_h, 0.0f);
    w.proj_kernel.assign(static_cast<std::size_t>(hidden) * output_vocab, 0.0f);
    w.proj_bias.assign(static_cast<std::size_t>(output_vocab), 0.0f);
    return w;
}

std::span<float> ModelWeights::array(int i) {
    switch (i) {
        case 0: return enc_input_kernel;
        case 1: return enc_recurrent_kernel;
        case 2: return enc_bias;
        case 3: return dec_input_kernel;
        case 4: return dec_recurrent_kernel;
        case 5: return dec_bias;
        case 6: return proj_kernel;
        case 7: return proj_bias;
    }
    throw std::out_of_range("weight array index");
}

std::span<const float> ModelWeights::array(int i) const {
    return const_cast<ModelWeights*>(this)->array(i);
}

const char* ModelWeights::array_name(int i) {
    static const char* names[kArrayCount] = {
        "enc_input_kernel", "enc_recurrent_kernel", "enc_bias",  "dec_input_kernel",
        "dec_recurrent_kernel", "dec_bias",         "proj_kernel", "proj_bias"};
    return names[i];
}

std::vector<int> ModelWeights::shape(int i) const {
    const int four_h = 4 * hidden;
    switch (i) {
        case 0: return {input_vocab, four_h};
        case 1: return {hidden, four_h};
        case 2: return {four_h};
        case 3: return {output_vocab, four_h};
        case 4: return {hidden, four_h};
        case 5: return {four_h};
        case 6: return {hidden, output_vocab};
        case 7: return {output_vocab};
    }
    throw std::out_of_range("weight array index");
}

std::array<int, ModelWeights::kArrayCount> ModelWeights::leading_dims() const {
    std::array<int, kArrayCount> dims{};
    for (int i = 0; i < kArrayCount; ++i) dims[i] = shape(i).front();
    return dims;
}

std::size_t ModelWeights::parameter_count() const {
    std::size_t n = 0;
    for (int i = 0; i < kArrayCount; ++i) n += array(i).size();
    return n;
}

bool ModelWeights::all_finite() const {
    for (int i = 0; i < kArrayCount; ++i) {
        for (float v : array(i)) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

ModelWeights init_random(const Seq2SeqConfig& config, int randomness_index) {
    config.validate();
    if (randomness_index < 1) throw std::invalid_argument("randomness_index must be >= 1");
    ModelWeights w =
        ModelWeights::zeros(config.input_vocab_size, config.hidden_size, config.output_vocab_size);
    std::mt19937_64 rng(config.seed);
    for (int draw = 0; draw < randomness_index; ++draw) {
        for (int i = 0; i < ModelWeights::kArrayCount; ++i) {
            for (float& v : w.array(i)) {
                v = static_cast<float>(uniform01(rng) - 0.5);
            }
        }
    }
    return w;
}

void set_forget_gate_bias(ModelWeights& w, float value) {
    for (int k = 0; k < w.hidden; ++k) {
        w.enc_bias[static_cast<std::size_t>(w.hidden) + k] = value;
        w.dec_bias[static_cast<std::size_t>(w.hidden) + k] = value;
    }
}

EncoderState encode(const ModelWeights& w, const IndexSequence& input) {
    EncoderState state;
    state.hidden.assign(w.hidden, 0.0);
    state.cell.assign(w.hidden, 0.0);
    for (int token : input.indices) {
        check_token(token, w.input_vocab, "encoder");
        lstm_step(w.enc_input_kernel, w.enc_recurrent_kernel, w.enc_bias, w.hidden, token,
                  state.hidden, state.cell, nullptr);
    }
    return state;
}

DecoderSession::DecoderSession(const ModelWeights& w, EncoderState state)
    : w_(w), hidden_(std::move(state.hidden)), cell_(std::move(state.cell)) {
    hidden_.resize(w.hidden, 0.0);
    cell_.resize(w.hidden, 0.0);
}

std::vector<double> DecoderSession::step(int token) {
    check_token(token, w_.output_vocab, "decoder");
    lstm_step(w_.dec_input_kernel, w_.dec_recurrent_kernel, w_.dec_bias, w_.hidden, token, hidden_,
              cell_, nullptr);
    return softmax(project(w_, hidden_));
}

std::u32string decode_greedy(const ModelWeights& w, const EncoderState& state,
                             const CharVocab& out_vocab, int max_len) {
    if (!out_vocab.has_markers()) {
        throw std::invalid_argument("decode_greedy requires a marker-bearing vocabulary");
    }
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    if (static_cast<int>(out_vocab.size()) != w.output_vocab) {
        throw std::invalid_argument("output vocabulary size does not match the model");
    }

    const int start = out_vocab.start_index();
    const int end = out_vocab.end_index();

    DecoderSession session(w, state);
    std::u32string out;
    int prev = start;
    for (int step = 0; step < max_len; ++step) {
        const std::vector<double> probs = session.step(prev);
        // argmax; the start marker is an input primer, never an emission
        int best = -1;
        for (int v = 0; v < static_cast<int>(probs.size()); ++v) {
            if (v == start) continue;
            if (best < 0 || probs[v] > probs[best]) best = v;
        }
        if (best == end) break;
        out.push_back(out_vocab.char_at(best));
        prev = best;
    }
    return out;
}

IndexSequence frame_with_markers(std::u32string_view text, const CharVocab& vocab) {
    if (!vocab.has_markers()) {
        throw std::invalid_argument("frame_with_markers requires a marker-bearing vocabulary");
    }
    IndexSequence seq;
    seq.vocab_size = vocab.size();
    seq.indices.reserve(text.size() + 2);
    seq.indices.push_back(vocab.start_index());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const int idx = vocab.index_of(text[i]);
        if (idx < 0) throw UnknownCharacterError(i, text[i]);
        seq.indices.push_back(idx);
    }
    seq.indices.push_back(vocab.end_index());
    return seq;
}

Gradients Gradients::zeros_like(const ModelWeights& w) {
    Gradients g;
    for (int i = 0; i < ModelWeights::kArrayCount; ++i) {
        g.arrays[i].assign(w.array(i).size(), 0.0);
    }
    return g;
}

bool Gradients::all_finite() const {
    for (const auto& arr : arrays) {
        for (double v : arr) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

double sequence_loss(const ModelWeights& w, const IndexSequence& input,
                     const IndexSequence& framed_target) {
    return run_forward(w, input, framed_target).loss;
}

double loss_and_gradients(const ModelWeights& w, const IndexSequence& input,
                          const IndexSequence& framed_target, Gradients* out) {
    const ForwardTrace trace = run_forward(w, input, framed_target);
    if (!out) return trace.loss;

    *out = Gradients::zeros_like(w);
    auto& g = out->arrays;
    const int hidden = w.hidden;
    const std::size_t dec_steps = trace.dec_steps.size();
    const double inv_steps = 1.0 / static_cast<double>(dec_steps);

    std::vector<double> dh(hidden, 0.0), dc(hidden, 0.0);

    for (std::size_t t = dec_steps; t-- > 0;) {
        const auto& probs = trace.dec_probs[t];
        const auto& h_t = trace.dec_h[t + 1];
        std::vector<double> dlogits(probs.size());
        for (std::size_t v = 0; v < probs.size(); ++v) {
            dlogits[v] = probs[v] * inv_steps;
        }
        dlogits[trace.dec_targets[t]] -= inv_steps;

        for (std::size_t v = 0; v < dlogits.size(); ++v) g[7][v] += dlogits[v];
        for (int k = 0; k < hidden; ++k) {
            const double hk = h_t[k];
            double* drow = g[6].data() + static_cast<std::size_t>(k) * w.output_vocab;
            const float* prow = w.proj_kernel.data() + static_cast<std::size_t>(k) * w.output_vocab;
            double acc = 0.0;
            for (std::size_t v = 0; v < dlogits.size(); ++v) {
                drow[v] += hk * dlogits[v];
                acc += static_cast<double>(prow[v]) * dlogits[v];
            }
            dh[k] += acc;
        }

        lstm_backward_step(trace.dec_steps[t], trace.dec_h[t], trace.dec_c[t],
                           w.dec_recurrent_kernel, hidden, dh, dc, g[3], g[4], g[5]);
    }

    // dh/dc now sit at the decoder's initial state = encoder final state
    for (std::size_t t = trace.enc_steps.size(); t-- > 0;) {
        lstm_backward_step(trace.enc_steps[t], trace.enc_h[t], trace.enc_c[t],
                           w.enc_recurrent_kernel, hidden, dh, dc, g[0], g[1], g[2]);
    }

    return trace.loss;
}

Trainer::Trainer(ModelWeights& w, double learning_rate) : w_(w), learning_rate_(learning_rate) {
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
    for (int i = 0; i < ModelWeights::kArrayCount; ++i) {
        ms_[i].assign(w.array(i).size(), 0.0);
    }
}

double Trainer::step(const IndexSequence& input, const IndexSequence& framed_target) {
    constexpr double kDecay = 0.9;
    constexpr double kEpsilon = 1e-7;

    Gradients grads;
    const double loss = loss_and_gradients(w_, input, framed_target, &grads);
    if (!std::isfinite(loss) || !grads.all_finite()) {
        throw NumericalDivergenceError("non-finite loss or gradient");
    }

    for (int i = 0; i < ModelWeights::kArrayCount; ++i) {
        std::span<float> params = w_.array(i);
        const auto& garr = grads.arrays[i];
        auto& marr = ms_[i];
        for (std::size_t e = 0; e < params.size(); ++e) {
            const double grad = garr[e];
            marr[e] = kDecay * marr[e] + (1.0 - kDecay) * grad * grad;
            params[e] = static_cast<float>(static_cast<double>(params[e]) -
                                           learning_rate_ * grad / (std::sqrt(marr[e]) + kEpsilon));
        }
    }
    return loss;
}

TrainResult train_to_target(ModelWeights& w, const IndexSequence& input,
                            std::u32string_view target_text, const CharVocab& out_vocab,
                            const Seq2SeqConfig& config) {
    config.validate();
    const IndexSequence framed = frame_with_markers(target_text, out_vocab);

    const auto matches_target = [&]() {
        return decode_greedy(w, encode(w, input), out_vocab, config.max_decode_len) == target_text;
    };

    TrainResult result;
    if (matches_target()) {
        result.success = true;
        result.final_loss = sequence_loss(w, input, framed);
        return result;
    }

    Trainer trainer(w, config.learning_rate);
    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        result.final_loss = trainer.step(input, framed);
        result.iterations_used = iter;
        if (iter % config.check_interval == 0 || iter == config.max_iterations) {
            if (matches_target()) {
                result.success = true;
                return result;
            }
        }
    }
    result.success = false;
    return result;
}

}  // namespace dobf
