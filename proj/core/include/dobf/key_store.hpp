#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dobf/seq2seq.hpp"
#include "dobf/text_codec.hpp"

namespace dobf {

inline constexpr std::uint32_t kKeyFormatVersion = 1;

/// A deobfuscation key: trained weights plus the vocabularies they were
/// trained against, in one portable artifact.
struct KeyFile {
    std::uint32_t format_version = kKeyFormatVersion;
    Seq2SeqConfig config;
    CharVocab encoder_vocab;
    CharVocab decoder_vocab;
    ModelWeights weights;
    std::string optimizer_id;

    /// Throws std::invalid_argument when shapes or vocab sizes disagree.
    void validate() const;
};

/// Canonical byte encoding:
///   "DOBK" | u32 version | u32 header_len | JSON header (UTF-8)
///   | eight float arrays, little-endian, declaration order
///   | SHA-256 of everything prior
/// Identical keys always serialize to identical bytes.
std::vector<std::uint8_t> serialize_key(const KeyFile& key);

/// Inverse of serialize_key. Throws CorruptKeyError (magic, truncated,
/// checksum, header, vocab, shape), UnsupportedVersionError.
KeyFile deserialize_key(const std::vector<std::uint8_t>& bytes);

/// Writes the canonical encoding via a temp file + rename, fsyncing before
/// close. Throws IoError.
void save_key(const KeyFile& key, const std::filesystem::path& path);

/// Reads and validates a key file. Throws IoError plus everything
/// deserialize_key throws.
KeyFile load_key(const std::filesystem::path& path);

}  // namespace dobf
