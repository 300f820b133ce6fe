#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dobf/text_codec.hpp"

namespace dobf {

struct Seq2SeqConfig {
    int hidden_size = 256;
    int input_vocab_size = 0;
    int output_vocab_size = 0;
    int max_decode_len = 100;
    double learning_rate = 1e-2;
    int max_iterations = 2000;
    int check_interval = 50;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on nonsensical values. max_iterations
    /// may be zero, meaning "initial round-trip check only".
    void validate() const;
};

/// The eight-array LSTM encoder-decoder parameter set. Entries are 32-bit
/// floats; all numeric passes accumulate in 64-bit. The same struct carries
/// the random obfuscation weights and, after training, the key payload.
///
/// Layout (row-major), with V_in = input vocab, H = hidden, V_out = output
/// vocab:
///   enc_input_kernel      V_in x 4H
///   enc_recurrent_kernel  H    x 4H
///   enc_bias              4H
///   dec_input_kernel      V_out x 4H
///   dec_recurrent_kernel  H    x 4H
///   dec_bias              4H
///   proj_kernel           H x V_out
///   proj_bias             V_out
/// Gates are packed (input, forget, cell-candidate, output) along the 4H
/// axis.
struct ModelWeights {
    int input_vocab = 0;
    int hidden = 0;
    int output_vocab = 0;

    std::vector<float> enc_input_kernel;
    std::vector<float> enc_recurrent_kernel;
    std::vector<float> enc_bias;
    std::vector<float> dec_input_kernel;
    std::vector<float> dec_recurrent_kernel;
    std::vector<float> dec_bias;
    std::vector<float> proj_kernel;
    std::vector<float> proj_bias;

    static constexpr int kArrayCount = 8;

    static ModelWeights zeros(int input_vocab, int hidden, int output_vocab);

    std::span<float> array(int i);
    std::span<const float> array(int i) const;
    static const char* array_name(int i);

    /// Shape of array i, e.g. {V_in, 4H} or {4H}.
    std::vector<int> shape(int i) const;
    /// First dimension of each of the eight arrays, in order.
    std::array<int, kArrayCount> leading_dims() const;
    std::size_t parameter_count() const;
    bool all_finite() const;

    bool operator==(const ModelWeights&) const = default;
};

/// Final LSTM carry of the encoder.
struct EncoderState {
    std::vector<double> hidden;
    std::vector<double> cell;
};

/// Draws the full weight set `randomness_index` times from a generator
/// seeded with config.seed and keeps the last draw. Every entry (biases
/// included) is uniform on [-0.5, 0.5). Deterministic and portable:
/// mt19937_64 with a fixed 53-bit-to-double mapping, arrays filled in
/// declaration order.
ModelWeights init_random(const Seq2SeqConfig& config, int randomness_index);

/// Sets the forget-gate slice of both LSTM biases to `value`. Applied to
/// trainable initializations only, never to ciphertext draws.
void set_forget_gate_bias(ModelWeights& w, float value);

/// Runs the encoder over the one-hot expansion of `input` from the zero
/// state; empty input returns the zero state.
EncoderState encode(const ModelWeights& w, const IndexSequence& input);

/// Stateful decoder: feed a token, advance the carry, get the next-token
/// distribution. Used by greedy decoding and exposed for inspection.
class DecoderSession {
public:
    DecoderSession(const ModelWeights& w, EncoderState state);

    /// Advances one step. Returns the softmax distribution over the output
    /// vocabulary (sums to 1).
    std::vector<double> step(int token);

private:
    const ModelWeights& w_;
    std::vector<double> hidden_;
    std::vector<double> cell_;
};

/// Greedy decoding: primes with the start marker, feeds back the argmax
/// character each step, stops at the end marker or after max_len emitted
/// characters. The start marker is never emitted; the returned string
/// contains no markers.
std::u32string decode_greedy(const ModelWeights& w, const EncoderState& state,
                             const CharVocab& out_vocab, int max_len);

/// Encodes `text` with `vocab` and frames it as [start, text..., end].
IndexSequence frame_with_markers(std::u32string_view text, const CharVocab& vocab);

/// Per-array gradients, double precision, same shapes as ModelWeights.
struct Gradients {
    std::array<std::vector<double>, ModelWeights::kArrayCount> arrays;

    static Gradients zeros_like(const ModelWeights& w);
    bool all_finite() const;
};

/// Mean per-character cross-entropy of the framed target under teacher
/// forcing. `framed_target` must start with the start marker and end with
/// the end marker.
double sequence_loss(const ModelWeights& w, const IndexSequence& input,
                     const IndexSequence& framed_target);

/// Same forward pass plus full backpropagation through time over decoder
/// and encoder. Returns the loss; fills `out` when non-null.
double loss_and_gradients(const ModelWeights& w, const IndexSequence& input,
                          const IndexSequence& framed_target, Gradients* out);

/// One teacher-forced training session over a single (input, target) pair.
/// Owns the RMSprop accumulators (decay 0.9, epsilon 1e-7).
class Trainer {
public:
    Trainer(ModelWeights& w, double learning_rate);

    /// One forward + BPTT + RMSprop update. Returns the pre-update loss.
    /// Throws NumericalDivergenceError if the loss or any gradient is
    /// non-finite.
    double step(const IndexSequence& input, const IndexSequence& framed_target);

private:
    ModelWeights& w_;
    double learning_rate_;
    std::array<std::vector<double>, ModelWeights::kArrayCount> ms_;
};

struct TrainResult {
    int iterations_used = 0;
    bool success = false;
    double final_loss = 0.0;
};

/// Runs Trainer::step up to config.max_iterations, greedy-decoding every
/// config.check_interval iterations (and once before the first step, and
/// after the last) and comparing against `target_text`. Returns early on
/// exact match. success=false tells the caller to retry with a fresh
/// initialization.
TrainResult train_to_target(ModelWeights& w, const IndexSequence& input,
                            std::u32string_view target_text, const CharVocab& out_vocab,
                            const Seq2SeqConfig& config);

}  // namespace dobf
