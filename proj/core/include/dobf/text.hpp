#pragma once

#include <string>
#include <string_view>

namespace dobf {

/// Decodes strict UTF-8 into a sequence of Unicode scalar values.
/// Throws Utf8Error on malformed input (truncated, overlong, surrogate,
/// out of range).
std::u32string utf8_decode(std::string_view utf8);

/// Encodes scalar values back to UTF-8 bytes.
std::string utf8_encode(std::u32string_view text);

/// Decodes UTF-8 leniently, replacing every malformed byte with U+FFFD.
std::u32string utf8_decode_lossy(std::string_view utf8);

/// Re-encodes arbitrary bytes as valid UTF-8 (malformed bytes -> U+FFFD).
std::string utf8_sanitize(std::string_view bytes);

}  // namespace dobf
