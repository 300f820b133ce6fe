#pragma once

#include <string_view>
#include <utility>

#include "dobf/cipher.hpp"
#include "dobf/key_store.hpp"

namespace dobf {

inline constexpr int kDefaultMaxAttempts = 3;

struct KeyGenReport {
    int iterations_used = 0;  // summed across attempts
    double final_loss = 0.0;
    double wall_time_s = 0.0;
    int attempts = 0;
    bool success = false;
};

/// Trains an encoder-decoder that maps the ciphertext back to the exact
/// plaintext and packages the trained weights as a key. Attempt k
/// (0-based) initializes from config.seed + k; training stops early on an
/// exact greedy round trip. Deterministic apart from wall_time_s.
///
/// The stored config's max_decode_len is raised to plaintext length + 1
/// when needed, so the key can always reproduce the full plaintext.
///
/// Throws DigestMismatchError when plaintext does not hash to the record's
/// digest, KeyGenFailedError when no attempt converges, and
/// NumericalDivergenceError from training.
std::pair<KeyFile, KeyGenReport> generate_key(std::string_view plaintext_utf8,
                                              const CipherRecord& cipher,
                                              const Seq2SeqConfig& config, int max_attempts);

/// True iff deobfuscating `ciphertext_utf8` with `key` reproduces
/// `plaintext_utf8` byte for byte.
/// Throws UnknownCharacterError when the ciphertext falls outside the
/// key's encoder vocabulary.
bool verify_roundtrip(const KeyFile& key, std::string_view ciphertext_utf8,
                      std::string_view plaintext_utf8);

}  // namespace dobf
