#include "dobf/key_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dobf/errors.hpp"
#include "dobf/sha256.hpp"

namespace dobf {
namespace {

constexpr char kMagic[4] = {'D', 'O', 'B', 'K'};

void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t read_u32_le(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

nlohmann::json vocab_to_json(const CharVocab& vocab) {
    nlohmann::json arr = nlohmann::json::array();
    for (char32_t c : vocab.chars()) arr.push_back(static_cast<std::uint32_t>(c));
    return arr;
}

CharVocab vocab_from_json(const nlohmann::json& arr) {
    std::vector<char32_t> chars;
    chars.reserve(arr.size());
    for (const auto& v : arr) {
        const auto cp = v.get<std::uint32_t>();
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) throw CorruptKeyError("vocab");
        chars.push_back(static_cast<char32_t>(cp));
    }

    const bool markers = chars.size() >= 2 && chars[chars.size() - 2] == kStartMarker &&
                         chars.back() == kEndMarker;
    const std::size_t source_len = markers ? chars.size() - 2 : chars.size();

    CharVocab vocab;
    try {
        vocab = CharVocab::from_chars(std::u32string_view(chars.data(), source_len), markers);
    } catch (const Error&) {
        throw CorruptKeyError("vocab");
    }
    // Reconstructed vocab must reproduce the stored array exactly, or the
    // stored array was not canonical (unsorted / duplicated entries).
    if (vocab.chars() != chars) throw CorruptKeyError("vocab");
    return vocab;
}

}  // namespace

void KeyFile::validate() const {
    config.validate();
    if (static_cast<int>(encoder_vocab.size()) != weights.input_vocab ||
        static_cast<int>(decoder_vocab.size()) != weights.output_vocab ||
        config.hidden_size != weights.hidden ||
        config.input_vocab_size != weights.input_vocab ||
        config.output_vocab_size != weights.output_vocab) {
        throw std::invalid_argument("key vocab/config/weight sizes disagree");
    }
    if (!decoder_vocab.has_markers()) {
        throw std::invalid_argument("decoder vocabulary must carry markers");
    }
    for (int i = 0; i < ModelWeights::kArrayCount; ++i) {
        const auto shape = weights.shape(i);
        std::size_t expect = 1;
        for (int d : shape) expect *= static_cast<std::size_t>(d);
        if (weights.array(i).size() != expect) {
            throw std::invalid_argument("weight array size does not match its shape");
        }
    }
}

std::vector<std::uint8_t> serialize_key(const KeyFile& key) {
    key.validate();

    nlohmann::json header;
    header["version"] = key.format_version;
    header["hidden_size"] = key.config.hidden_size;
    header["max_decode_len"] = key.config.max_decode_len;
    header["learning_rate"] = key.config.learning_rate;
    header["max_iterations"] = key.config.max_iterations;
    header["check_interval"] = key.config.check_interval;
    header["seed"] = key.config.seed;
    header["optimizer"] = key.optimizer_id;
    header["enc_vocab"] = vocab_to_json(key.encoder_vocab);
    header["dec_vocab"] = vocab_to_json(key.decoder_vocab);
    nlohmann::json shapes = nlohmann::json::array();
    for (int i = 0; i < ModelWeights::kArrayCount; ++i) shapes.push_back(key.weights.shape(i));
    header["shapes"] = shapes;

    const std::string header_text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(16 + header_text.size() + key.weights.parameter_count() * 4 + 32);
    out.insert(out.end(), kMagic, kMagic + 4);
    append_u32_le(out, key.format_version);
    append_u32_le(out, static_cast<std::uint32_t>(header_text.size()));
    out.insert(out.end(), header_text.begin(), header_text.end());

    for (int i = 0; i < ModelWeights::kArrayCount; ++i) {
        for (float v : key.weights.array(i)) {
            append_u32_le(out, std::bit_cast<std::uint32_t>(v));
        }
    }

    Sha256 hash;
    hash.update(out.data(), out.size());
    const Sha256Digest digest = hash.finish();
    out.insert(out.end(), digest.begin(), digest.end());
    return out;
}

KeyFile deserialize_key(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 12 + 32) throw CorruptKeyError("truncated");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CorruptKeyError("magic");

    const std::uint32_t version = read_u32_le(bytes.data() + 4);
    if (version != kKeyFormatVersion) throw UnsupportedVersionError(version);

    Sha256 hash;
    hash.update(bytes.data(), bytes.size() - 32);
    const Sha256Digest digest = hash.finish();
    if (std::memcmp(digest.data(), bytes.data() + bytes.size() - 32, 32) != 0) {
        throw CorruptKeyError("checksum");
    }

    const std::uint32_t header_len = read_u32_le(bytes.data() + 8);
    const std::size_t payload_end = bytes.size() - 32;
    if (12 + static_cast<std::size_t>(header_len) > payload_end) {
        throw CorruptKeyError("truncated");
    }

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
    } catch (const nlohmann::json::parse_error&) {
        throw CorruptKeyError("header");
    }

    KeyFile key;
    try {
        key.format_version = header.at("version").get<std::uint32_t>();
        key.config.hidden_size = header.at("hidden_size").get<int>();
        key.config.max_decode_len = header.at("max_decode_len").get<int>();
        key.config.learning_rate = header.at("learning_rate").get<double>();
        key.config.max_iterations = header.at("max_iterations").get<int>();
        key.config.check_interval = header.at("check_interval").get<int>();
        key.config.seed = header.at("seed").get<std::uint64_t>();
        key.optimizer_id = header.at("optimizer").get<std::string>();
        key.encoder_vocab = vocab_from_json(header.at("enc_vocab"));
        key.decoder_vocab = vocab_from_json(header.at("dec_vocab"));
    } catch (const nlohmann::json::exception&) {
        throw CorruptKeyError("header");
    }

    key.config.input_vocab_size = static_cast<int>(key.encoder_vocab.size());
    key.config.output_vocab_size = static_cast<int>(key.decoder_vocab.size());

    try {
        key.weights = ModelWeights::zeros(key.config.input_vocab_size, key.config.hidden_size,
                                          key.config.output_vocab_size);
    } catch (const std::invalid_argument&) {
        throw CorruptKeyError("shape");
    }

    // Stored shapes must agree with the ones implied by config + vocabs.
    try {
        const nlohmann::json& shapes = header.at("shapes");
        if (shapes.size() != ModelWeights::kArrayCount) throw CorruptKeyError("shape");
        for (int i = 0; i < ModelWeights::kArrayCount; ++i) {
            if (shapes[i].get<std::vector<int>>() != key.weights.shape(i)) {
                throw CorruptKeyError("shape");
            }
        }
    } catch (const nlohmann::json::exception&) {
        throw CorruptKeyError("header");
    }

    const std::size_t weights_begin = 12 + header_len;
    const std::size_t expect_bytes = key.weights.parameter_count() * 4;
    if (payload_end - weights_begin != expect_bytes) throw CorruptKeyError("truncated");

    const std::uint8_t* p = bytes.data() + weights_begin;
    for (int i = 0; i < ModelWeights::kArrayCount; ++i) {
        for (float& v : key.weights.array(i)) {
            v = std::bit_cast<float>(read_u32_le(p));
            p += 4;
        }
    }

    try {
        key.validate();
    } catch (const std::invalid_argument&) {
        throw CorruptKeyError("shape");
    }
    return key;
}

void save_key(const KeyFile& key, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = serialize_key(key);

    std::filesystem::path tmp = path;
    tmp += ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw IoError("cannot open " + tmp.string() + " for writing");

    std::size_t written = 0;
    while (written < bytes.size()) {
        const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
        if (n < 0) {
            ::close(fd);
            ::unlink(tmp.c_str());
            throw IoError("write failed: " + tmp.string());
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0 || ::close(fd) != 0) {
        ::unlink(tmp.c_str());
        throw IoError("flush failed: " + tmp.string());
    }

    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        ::unlink(tmp.c_str());
        throw IoError("rename failed: " + path.string() + " (" + ec.message() + ")");
    }
}

KeyFile load_key(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return deserialize_key(bytes);
}

}  // namespace dobf
