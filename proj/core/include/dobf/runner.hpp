#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "dobf/key_store.hpp"
#include "dobf/sha256.hpp"

namespace dobf {

struct ExecutionResult {
    int exit_code = -1;
    std::string stdout_text;  // UTF-8, malformed bytes replaced
    std::string stderr_text;
    double duration_s = 0.0;
};

/// Reconstructs the plaintext from a ciphertext under a key: encode with
/// the key's encoder vocabulary, run the encoder, greedy-decode against
/// the decoder vocabulary. Read-only with respect to the key.
/// Throws UnknownCharacterError for ciphertext characters outside the
/// key's encoder vocabulary.
std::string deobfuscate(std::string_view ciphertext_utf8, const KeyFile& key);

/// Deobfuscates and runs the result through a user-supplied interpreter.
///
/// `interpreter_cmd` is a shell command template containing a `{file}`
/// placeholder for the recovered source path. When `verify_digest` is
/// present the recovered plaintext must hash to it or nothing is executed
/// (DigestMismatchError). The plaintext lives in a 0600 temporary file for
/// the child's lifetime only. No sandboxing: whoever holds the key holds
/// execution authority.
///
/// Throws DigestMismatchError, SpawnError, std::invalid_argument on a
/// missing/placeholder-free template, plus everything deobfuscate throws.
ExecutionResult execute(std::string_view ciphertext_utf8, const KeyFile& key,
                        std::string_view interpreter_cmd,
                        const std::optional<Sha256Digest>& verify_digest);

}  // namespace dobf
