#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "dobf/seq2seq.hpp"
#include "dobf/sha256.hpp"
#include "dobf/text_codec.hpp"

namespace dobf {

inline constexpr int kDefaultRandomnessIndex = 10;

/// A generated ciphertext plus everything needed to regenerate it. Carries
/// only a digest of the plaintext so the record can travel with the
/// ciphertext publicly.
struct CipherRecord {
    std::string ciphertext;  // UTF-8
    Sha256Digest plaintext_sha256{};
    std::uint64_t seed = 0;
    int randomness_index = kDefaultRandomnessIndex;
    std::string charset_id;
    Seq2SeqConfig config_snapshot;
};

/// The 95 printable ASCII characters (code points 32..126).
std::string default_charset();

/// Stable name for a charset: "ascii95" for the default, otherwise
/// "custom-" + first 8 hex digits of its SHA-256.
std::string charset_id(std::string_view charset_utf8);

/// Obfuscates `plaintext` by pushing it through a randomly weighted
/// encoder-decoder. The encoder vocabulary is the plaintext's character
/// set; the decoder vocabulary is charset union plaintext characters plus
/// markers, so the output always has a home for every plaintext character
/// set extension. Fully deterministic given (plaintext, charset,
/// config.seed, randomness_index).
///
/// Throws EmptyTextError, CharsetTooSmallError, MarkerCollisionError.
CipherRecord generate_ciphertext(std::string_view plaintext_utf8, std::string_view charset_utf8,
                                 const Seq2SeqConfig& config, int randomness_index);

/// Sidecar (de)serialization: a single-line JSON document with keys
/// {version, seed, n, charset_id, sha256, max_decode_len, hidden_size}.
std::string cipher_meta_to_json(const CipherRecord& record);
CipherRecord cipher_meta_from_json(std::string_view json_text);

/// Writes <base>.obf (UTF-8 ciphertext) and <base>.obf.meta.json.
void write_cipher_files(const CipherRecord& record, const std::filesystem::path& base);

/// Loads a ciphertext file and, when present, its sidecar. The returned
/// record's ciphertext is the file content; other fields come from the
/// sidecar (zeroed when absent and *have_meta is set false).
CipherRecord read_cipher_files(const std::filesystem::path& obf_path, bool* have_meta);

}  // namespace dobf
