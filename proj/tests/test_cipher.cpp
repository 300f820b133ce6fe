#include "dobf/cipher.hpp"

#include <random>
#include <set>

#include <doctest.h>

#include "dobf/errors.hpp"
#include "dobf/eval.hpp"
#include "dobf/text.hpp"

using namespace dobf;

namespace {

Seq2SeqConfig small_config(std::uint64_t seed) {
    Seq2SeqConfig config;
    config.hidden_size = 32;
    config.max_decode_len = 60;
    config.seed = seed;
    return config;
}

}  // namespace

TEST_CASE("default charset is the 95 printable ASCII characters") {
    const std::string charset = default_charset();
    CHECK(charset.size() == 95);
    CHECK(charset.find('a') != std::string::npos);
    CHECK(charset.find('0') != std::string::npos);
    CHECK(charset.find(';') != std::string::npos);
    CHECK(charset.find(' ') != std::string::npos);
    CHECK(charset.find('\x02') == std::string::npos);
    CHECK(charset.find('\x03') == std::string::npos);
    CHECK(std::set<char>(charset.begin(), charset.end()).size() == 95);
    CHECK(build_vocab(utf8_decode(charset), false).size() == 95);
    CHECK(build_vocab(utf8_decode(charset), true).size() == 97);
    CHECK(charset_id(charset) == "ascii95");
    CHECK(charset_id("abcdef") != "ascii95");
}

TEST_CASE("generate_ciphertext is deterministic") {
    const std::string plaintext = "def f(x):\n    return x * 2\n";
    const CipherRecord a = generate_ciphertext(plaintext, default_charset(), small_config(7), 10);
    const CipherRecord b = generate_ciphertext(plaintext, default_charset(), small_config(7), 10);
    CHECK(a.ciphertext == b.ciphertext);
    CHECK(a.plaintext_sha256 == b.plaintext_sha256);
    CHECK(a.seed == 7);
    CHECK(a.randomness_index == 10);
    CHECK(a.charset_id == "ascii95");

    const CipherRecord c = generate_ciphertext(plaintext, default_charset(), small_config(7), 11);
    CHECK(a.ciphertext != c.ciphertext);
}

TEST_CASE("default randomness index matches the documented value") {
    CHECK(kDefaultRandomnessIndex == 10);
}

TEST_CASE("ciphertext stays inside the output alphabet and length cap") {
    const std::string plaintext = "while true; do echo hi; done\n";
    const std::u32string plain32 = utf8_decode(plaintext);
    std::set<char32_t> allowed(plain32.begin(), plain32.end());
    for (char c : default_charset()) allowed.insert(static_cast<char32_t>(c));

    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const CipherRecord record =
            generate_ciphertext(plaintext, default_charset(), small_config(seed), 10);
        const std::u32string cipher32 = utf8_decode(record.ciphertext);
        CHECK(cipher32.size() <= 60);
        for (char32_t ch : cipher32) CHECK(allowed.count(ch) == 1);
    }
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(generate_ciphertext("", default_charset(), small_config(1), 10),
                    EmptyTextError);
    CHECK_THROWS_AS(generate_ciphertext("abc", "aaaa", small_config(1), 10), CharsetTooSmallError);
    CHECK_THROWS_AS(generate_ciphertext("a\x02z", default_charset(), small_config(1), 10),
                    MarkerCollisionError);
    const std::string bad_charset = std::string("ab") + '\x03';
    CHECK_THROWS_AS(generate_ciphertext("abc", bad_charset, small_config(1), 10),
                    MarkerCollisionError);
    CHECK_THROWS_AS(generate_ciphertext("abc", default_charset(), small_config(1), 0),
                    std::invalid_argument);
}

TEST_CASE("different seeds essentially always change the ciphertext") {
    const std::string plaintext = "int main() { return 42; } // padd";
    REQUIRE(utf8_decode(plaintext).size() >= 20);

    int differing = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const CipherRecord a = generate_ciphertext(plaintext, default_charset(),
                                                   small_config(1000 + 2 * t), 10);
        const CipherRecord b = generate_ciphertext(plaintext, default_charset(),
                                                   small_config(1000 + 2 * t + 1), 10);
        const std::size_t dist = levenshtein_utf8(a.ciphertext, b.ciphertext);
        if (dist > 0) ++differing;
    }
    CHECK(differing >= 99);
}

TEST_CASE("long plaintexts cannot round trip through the cap") {
    std::string plaintext;
    for (int i = 0; i < 30; ++i) plaintext += "0123456789";  // 300 chars > cap 60
    const CipherRecord record =
        generate_ciphertext(plaintext, default_charset(), small_config(3), 10);
    CHECK(record.ciphertext != plaintext);
}

TEST_CASE("meta json round trips") {
    const CipherRecord record =
        generate_ciphertext("print('x')\n", default_charset(), small_config(99), 4);
    const std::string json_text = cipher_meta_to_json(record);
    CHECK(json_text.find('\n') == std::string::npos);  // single line

    const CipherRecord parsed = cipher_meta_from_json(json_text);
    CHECK(parsed.seed == record.seed);
    CHECK(parsed.randomness_index == 4);
    CHECK(parsed.charset_id == record.charset_id);
    CHECK(parsed.plaintext_sha256 == record.plaintext_sha256);
    CHECK(parsed.config_snapshot.max_decode_len == record.config_snapshot.max_decode_len);
    CHECK(parsed.config_snapshot.hidden_size == record.config_snapshot.hidden_size);

    CHECK_THROWS_AS(cipher_meta_from_json("not json"), IoError);
    CHECK_THROWS_AS(cipher_meta_from_json("{}"), IoError);
}

TEST_CASE("cipher files round trip through disk") {
    const auto dir = std::filesystem::temp_directory_path() / "dobf_cipher_test";
    std::filesystem::create_directories(dir);
    const CipherRecord record =
        generate_ciphertext("x = [i**2 for i in range(9)]\n", default_charset(), small_config(5),
                            10);
    write_cipher_files(record, (dir / "unit").string());

    bool have_meta = false;
    const CipherRecord loaded = read_cipher_files(dir / "unit.obf", &have_meta);
    CHECK(have_meta);
    CHECK(loaded.ciphertext == record.ciphertext);
    CHECK(loaded.seed == record.seed);
    CHECK(loaded.plaintext_sha256 == record.plaintext_sha256);
    std::filesystem::remove_all(dir);
}

TEST_CASE("length sweep: cap always holds, mean length is logged") {
    // Desk-scale length sweep; the mean is an observed statistic, not an
    // assertion.
    std::mt19937_64 rng(2024);
    const std::string charset = default_charset();
    std::size_t total_len = 0;
    const int samples = 50;
    for (int i = 0; i < samples; ++i) {
        const int len = 1 + static_cast<int>(rng() % 1500);
        std::string plaintext;
        plaintext.reserve(static_cast<std::size_t>(len));
        for (int j = 0; j < len; ++j) plaintext.push_back(charset[rng() % charset.size()]);

        Seq2SeqConfig config;
        config.hidden_size = 64;
        config.max_decode_len = 100;
        config.seed = 9000 + static_cast<std::uint64_t>(i);
        const CipherRecord record = generate_ciphertext(plaintext, charset, config, 10);
        const std::size_t clen = utf8_decode(record.ciphertext).size();
        CHECK(clen <= 100);
        total_len += clen;
    }
    MESSAGE("observed mean ciphertext length over ", samples,
            " samples: ", static_cast<double>(total_len) / samples);
}

TEST_CASE("non-ascii plaintexts extend the decoder alphabet") {
    const std::string plaintext = "print('héλλo')\n";
    const CipherRecord record =
        generate_ciphertext(plaintext, default_charset(), small_config(1), 10);
    // 95 charset + markers + plaintext-only characters
    CHECK(record.config_snapshot.output_vocab_size > 97);
    CHECK_NOTHROW(utf8_decode(record.ciphertext));
}
