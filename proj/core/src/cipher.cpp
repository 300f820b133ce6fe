#include "dobf/cipher.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "dobf/errors.hpp"
#include "dobf/text.hpp"

namespace dobf {
namespace {

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string default_charset() {
    std::string out;
    out.reserve(95);
    for (int c = 32; c <= 126; ++c) out.push_back(static_cast<char>(c));
    return out;
}

std::string charset_id(std::string_view charset_utf8) {
    if (charset_utf8 == default_charset()) return "ascii95";
    return "custom-" + to_hex(sha256(charset_utf8)).substr(0, 8);
}

CipherRecord generate_ciphertext(std::string_view plaintext_utf8, std::string_view charset_utf8,
                                 const Seq2SeqConfig& config, int randomness_index) {
    const std::u32string plaintext = utf8_decode(plaintext_utf8);
    const std::u32string charset = utf8_decode(charset_utf8);
    if (plaintext.empty()) throw EmptyTextError();
    if (std::set<char32_t>(charset.begin(), charset.end()).size() < 2) {
        throw CharsetTooSmallError();
    }
    if (randomness_index < 1) throw std::invalid_argument("randomness_index must be >= 1");

    const CharVocab in_vocab = CharVocab::from_text(plaintext, false);
    const CharVocab out_vocab = CharVocab::from_chars(charset + plaintext, true);

    Seq2SeqConfig snapshot = config;
    snapshot.input_vocab_size = static_cast<int>(in_vocab.size());
    snapshot.output_vocab_size = static_cast<int>(out_vocab.size());
    snapshot.validate();

    const ModelWeights w = init_random(snapshot, randomness_index);
    const EncoderState state = encode(w, encode_text(plaintext, in_vocab));
    const std::u32string ciphertext = decode_greedy(w, state, out_vocab, snapshot.max_decode_len);

    CipherRecord record;
    record.ciphertext = utf8_encode(ciphertext);
    record.plaintext_sha256 = sha256(plaintext_utf8);
    record.seed = snapshot.seed;
    record.randomness_index = randomness_index;
    record.charset_id = charset_id(charset_utf8);
    record.config_snapshot = snapshot;
    return record;
}

std::string cipher_meta_to_json(const CipherRecord& record) {
    nlohmann::json meta;
    meta["version"] = 1;
    meta["seed"] = record.seed;
    meta["n"] = record.randomness_index;
    meta["charset_id"] = record.charset_id;
    meta["sha256"] = to_hex(record.plaintext_sha256);
    meta["max_decode_len"] = record.config_snapshot.max_decode_len;
    meta["hidden_size"] = record.config_snapshot.hidden_size;
    return meta.dump();
}

CipherRecord cipher_meta_from_json(std::string_view json_text) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("bad cipher metadata: ") + e.what());
    }
    CipherRecord record;
    try {
        if (meta.at("version").get<int>() != 1) {
            throw IoError("unsupported cipher metadata version");
        }
        record.seed = meta.at("seed").get<std::uint64_t>();
        record.randomness_index = meta.at("n").get<int>();
        record.charset_id = meta.at("charset_id").get<std::string>();
        record.config_snapshot.max_decode_len = meta.at("max_decode_len").get<int>();
        record.config_snapshot.hidden_size = meta.at("hidden_size").get<int>();
        record.config_snapshot.seed = record.seed;

        const std::string hex = meta.at("sha256").get<std::string>();
        if (hex.size() != 64) throw IoError("bad sha256 field length");
        for (std::size_t i = 0; i < 32; ++i) {
            record.plaintext_sha256[i] =
                static_cast<std::uint8_t>(std::stoul(hex.substr(i * 2, 2), nullptr, 16));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad cipher metadata: ") + e.what());
    }
    return record;
}

void write_cipher_files(const CipherRecord& record, const std::filesystem::path& base) {
    std::filesystem::path obf = base;
    obf += ".obf";
    std::filesystem::path meta = base;
    meta += ".obf.meta.json";
    write_file_bytes(obf, record.ciphertext);
    write_file_bytes(meta, cipher_meta_to_json(record) + "\n");
}

CipherRecord read_cipher_files(const std::filesystem::path& obf_path, bool* have_meta) {
    const std::string ciphertext = read_file_bytes(obf_path);
    std::filesystem::path meta_path = obf_path;
    meta_path += ".meta.json";

    CipherRecord record;
    if (std::filesystem::exists(meta_path)) {
        record = cipher_meta_from_json(read_file_bytes(meta_path));
        if (have_meta) *have_meta = true;
    } else {
        if (have_meta) *have_meta = false;
    }
    record.ciphertext = ciphertext;
    return record;
}

}  // namespace dobf
