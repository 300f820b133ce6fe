#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dobf {

/// Start/end-of-sequence markers. Control characters cannot occur in the
/// printable source texts this toolkit operates on; inputs containing them
/// are rejected outright.
constexpr char32_t kStartMarker = U'';  // STX
constexpr char32_t kEndMarker = U'';    // ETX

/// Bijective character <-> index dictionary over a fixed character set.
///
/// Characters are Unicode scalar values sorted by code point, indices are
/// contiguous from 0. When markers are present they occupy the last two
/// slots (start, end) and are guaranteed not to occur in the source text.
/// Immutable after construction; safe to share across threads.
class CharVocab {
public:
    CharVocab() = default;

    /// Builds the sorted deduplicated character set of `text`, optionally
    /// appending the start/end markers.
    /// Throws EmptyTextError, MarkerCollisionError.
    static CharVocab from_text(std::u32string_view text, bool with_markers);

    /// Builds a vocabulary from an explicit character set (deduplicated and
    /// sorted here). Unlike from_text an empty set is allowed.
    /// Throws MarkerCollisionError if the set contains a marker.
    static CharVocab from_chars(std::u32string_view chars, bool with_markers);

    const std::vector<char32_t>& chars() const { return chars_; }
    std::size_t size() const { return chars_.size(); }
    bool has_markers() const { return has_markers_; }

    bool contains(char32_t c) const { return index_of_.count(c) != 0; }
    int index_of(char32_t c) const;       // -1 when absent
    char32_t char_at(int index) const;    // throws IndexOutOfRangeError

    int start_index() const { return start_index_; }  // -1 without markers
    int end_index() const { return end_index_; }

    bool operator==(const CharVocab& other) const {
        return chars_ == other.chars_ && has_markers_ == other.has_markers_;
    }

private:
    std::vector<char32_t> chars_;
    std::map<char32_t, int> index_of_;
    bool has_markers_ = false;
    int start_index_ = -1;
    int end_index_ = -1;
};

/// A text rendered as token indices of some vocabulary.
struct IndexSequence {
    std::vector<int> indices;
    std::size_t vocab_size = 0;

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
};

/// See CharVocab::from_text.
CharVocab build_vocab(std::u32string_view text, bool with_markers);

/// Maps each character to its vocabulary index, preserving length.
/// Throws UnknownCharacterError for characters absent from `vocab`.
IndexSequence encode_text(std::u32string_view text, const CharVocab& vocab);

/// Positionwise inverse of encode_text.
/// Throws IndexOutOfRangeError.
std::u32string decode_text(const IndexSequence& seq, const CharVocab& vocab);

}  // namespace dobf
