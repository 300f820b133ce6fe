#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dobf {

/// Base class for every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyTextError : Error {
    EmptyTextError() : Error("text is empty") {}
};

struct Utf8Error : Error {
    using Error::Error;
};

/// Input text contains one of the reserved marker characters (STX/ETX).
struct MarkerCollisionError : Error {
    using Error::Error;
};

struct UnknownCharacterError : Error {
    UnknownCharacterError(std::size_t position, char32_t character)
        : Error("unknown character U+" + to_hex(character) + " at position " +
                std::to_string(position)),
          position(position),
          character(character) {}

    std::size_t position;
    char32_t character;

private:
    static std::string to_hex(char32_t c) {
        static const char digits[] = "0123456789ABCDEF";
        std::string out;
        for (int shift = 28; shift >= 0; shift -= 4) {
            int nibble = static_cast<int>((c >> shift) & 0xF);
            if (!out.empty() || nibble != 0 || shift < 16) out.push_back(digits[nibble]);
        }
        return out;
    }
};

struct IndexOutOfRangeError : Error {
    IndexOutOfRangeError(std::size_t position, int index, std::size_t vocab_size)
        : Error("index " + std::to_string(index) + " at position " + std::to_string(position) +
                " outside vocabulary of size " + std::to_string(vocab_size)) {}
};

struct CharsetTooSmallError : Error {
    CharsetTooSmallError() : Error("charset must contain at least 2 distinct characters") {}
};

/// Loss or a gradient became non-finite during training.
struct NumericalDivergenceError : Error {
    using Error::Error;
};

struct DigestMismatchError : Error {
    DigestMismatchError() : Error("sha256 digest does not match") {}
};

struct KeyGenFailedError : Error {
    explicit KeyGenFailedError(int attempts)
        : Error("key generation failed after " + std::to_string(attempts) + " attempt(s)"),
          attempts(attempts) {}
    int attempts;
};

struct IoError : Error {
    using Error::Error;
};

struct CorruptKeyError : Error {
    explicit CorruptKeyError(std::string reason_)
        : Error("corrupt key file: " + reason_), reason(std::move(reason_)) {}
    std::string reason;
};

struct UnsupportedVersionError : Error {
    explicit UnsupportedVersionError(unsigned version)
        : Error("unsupported key file version " + std::to_string(version)) {}
};

struct InsufficientDataError : Error {
    using Error::Error;
};

struct CorpusError : Error {
    using Error::Error;
};

struct SpawnError : Error {
    using Error::Error;
};

}  // namespace dobf
