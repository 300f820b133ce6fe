#include "dobf/text_codec.hpp"

#include <algorithm>
#include <set>

#include "dobf/errors.hpp"

namespace dobf {
namespace {

void reject_markers(std::u32string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == kStartMarker || text[i] == kEndMarker) {
            throw MarkerCollisionError("reserved marker character at position " +
                                       std::to_string(i));
        }
    }
}

}  // namespace

CharVocab CharVocab::from_chars(std::u32string_view chars, bool with_markers) {
    reject_markers(chars);

    std::set<char32_t> unique(chars.begin(), chars.end());

    CharVocab vocab;
    vocab.chars_.assign(unique.begin(), unique.end());  // sorted by code point
    if (with_markers) {
        vocab.start_index_ = static_cast<int>(vocab.chars_.size());
        vocab.chars_.push_back(kStartMarker);
        vocab.end_index_ = static_cast<int>(vocab.chars_.size());
        vocab.chars_.push_back(kEndMarker);
        vocab.has_markers_ = true;
    }
    for (std::size_t i = 0; i < vocab.chars_.size(); ++i) {
        vocab.index_of_[vocab.chars_[i]] = static_cast<int>(i);
    }
    return vocab;
}

CharVocab CharVocab::from_text(std::u32string_view text, bool with_markers) {
    if (text.empty()) throw EmptyTextError();
    return from_chars(text, with_markers);
}

int CharVocab::index_of(char32_t c) const {
    auto it = index_of_.find(c);
    return it == index_of_.end() ? -1 : it->second;
}

char32_t CharVocab::char_at(int index) const {
    if (index < 0 || static_cast<std::size_t>(index) >= chars_.size()) {
        throw IndexOutOfRangeError(0, index, chars_.size());
    }
    return chars_[static_cast<std::size_t>(index)];
}

CharVocab build_vocab(std::u32string_view text, bool with_markers) {
    return CharVocab::from_text(text, with_markers);
}

IndexSequence encode_text(std::u32string_view text, const CharVocab& vocab) {
    IndexSequence seq;
    seq.vocab_size = vocab.size();
    seq.indices.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const int idx = vocab.index_of(text[i]);
        if (idx < 0) throw UnknownCharacterError(i, text[i]);
        seq.indices.push_back(idx);
    }
    return seq;
}

std::u32string decode_text(const IndexSequence& seq, const CharVocab& vocab) {
    std::u32string out;
    out.reserve(seq.indices.size());
    for (std::size_t i = 0; i < seq.indices.size(); ++i) {
        const int idx = seq.indices[i];
        if (idx < 0 || static_cast<std::size_t>(idx) >= vocab.size()) {
            throw IndexOutOfRangeError(i, idx, vocab.size());
        }
        out.push_back(vocab.char_at(idx));
    }
    return out;
}

}  // namespace dobf
