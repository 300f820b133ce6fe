#include "dobf/keygen.hpp"

#include <chrono>

#include "dobf/errors.hpp"
#include "dobf/runner.hpp"
#include "dobf/text.hpp"

namespace dobf {

std::pair<KeyFile, KeyGenReport> generate_key(std::string_view plaintext_utf8,
                                              const CipherRecord& cipher,
                                              const Seq2SeqConfig& config, int max_attempts) {
    if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
    if (sha256(plaintext_utf8) != cipher.plaintext_sha256) throw DigestMismatchError();

    const std::u32string plaintext = utf8_decode(plaintext_utf8);
    const std::u32string ciphertext = utf8_decode(cipher.ciphertext);

    // A freshly generated ciphertext can be empty (the first decode step may
    // pick the end marker); the decoder then learns from the zero state.
    const CharVocab enc_vocab = CharVocab::from_chars(ciphertext, false);
    const CharVocab dec_vocab = CharVocab::from_text(plaintext, true);
    const IndexSequence input = encode_text(ciphertext, enc_vocab);

    Seq2SeqConfig train_config = config;
    train_config.input_vocab_size = static_cast<int>(enc_vocab.size());
    train_config.output_vocab_size = static_cast<int>(dec_vocab.size());
    train_config.max_decode_len =
        std::max(config.max_decode_len, static_cast<int>(plaintext.size()) + 1);
    train_config.validate();

    KeyGenReport report;
    const auto started = std::chrono::steady_clock::now();

    ModelWeights weights;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Seq2SeqConfig attempt_config = train_config;
        attempt_config.seed = train_config.seed + static_cast<std::uint64_t>(attempt);

        weights = init_random(attempt_config, 1);
        set_forget_gate_bias(weights, 1.0f);

        const TrainResult result =
            train_to_target(weights, input, plaintext, dec_vocab, attempt_config);
        report.iterations_used += result.iterations_used;
        report.final_loss = result.final_loss;
        report.attempts = attempt + 1;
        if (result.success) {
            report.success = true;
            train_config.seed = attempt_config.seed;  // the seed that produced the key
            break;
        }
    }
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (!report.success) throw KeyGenFailedError(report.attempts);

    KeyFile key;
    key.config = train_config;
    key.encoder_vocab = enc_vocab;
    key.decoder_vocab = dec_vocab;
    key.weights = std::move(weights);
    key.optimizer_id = "rmsprop(decay=0.9,epsilon=1e-7)";
    key.validate();
    return {std::move(key), report};
}

bool verify_roundtrip(const KeyFile& key, std::string_view ciphertext_utf8,
                      std::string_view plaintext_utf8) {
    return deobfuscate(ciphertext_utf8, key) == plaintext_utf8;
}

}  // namespace dobf
