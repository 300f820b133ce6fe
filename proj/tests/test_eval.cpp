#include "dobf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>

#include "dobf/cipher.hpp"
#include "dobf/errors.hpp"
#include "oracles.hpp"

using namespace dobf;

namespace {

std::vector<std::u32string> all_strings_up_to(int max_len) {
    const std::u32string alphabet = U"abc";
    std::vector<std::u32string> out{U""};
    std::vector<std::u32string> frontier{U""};
    for (int len = 1; len <= max_len; ++len) {
        std::vector<std::u32string> next;
        for (const auto& s : frontier) {
            for (char32_t c : alphabet) {
                next.push_back(s + c);
                out.push_back(s + c);
            }
        }
        frontier = std::move(next);
    }
    return out;
}

void write_pair(const std::filesystem::path& dir, const std::string& id, std::string_view deobf,
                std::string_view benchmark) {
    std::ofstream(dir / (id + ".deobf")) << deobf;
    std::ofstream(dir / (id + ".obf-benchmark")) << benchmark;
}

Seq2SeqConfig fast_config() {
    Seq2SeqConfig config;
    config.hidden_size = 8;
    config.max_decode_len = 30;
    return config;
}

}  // namespace

TEST_CASE("levenshtein basics") {
    CHECK(levenshtein(U"abc", U"abc") == 0);
    CHECK(levenshtein(U"", U"abc") == 3);
    CHECK(levenshtein(U"abc", U"") == 3);
    CHECK(levenshtein(U"kitten", U"sitting") == 3);
    CHECK(oracles::lev_recursive(U"kitten", U"sitting") == 3);
    CHECK(levenshtein(U"ab", U"ba") == 2);
    CHECK(levenshtein_utf8("héllo", "hello") == 1);
}

TEST_CASE("levenshtein matches the recursive oracle exhaustively for length <= 3") {
    const auto strings = all_strings_up_to(3);
    REQUIRE(strings.size() == 40);  // 1 + 3 + 9 + 27
    for (const auto& a : strings) {
        for (const auto& b : strings) {
            CHECK(levenshtein(a, b) == oracles::lev_recursive(a, b));
        }
    }
}

TEST_CASE("levenshtein metric axioms on sampled triples") {
    const auto strings = all_strings_up_to(5);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const auto& a = strings[rng() % strings.size()];
        const auto& b = strings[rng() % strings.size()];
        const auto& c = strings[rng() % strings.size()];
        const std::size_t ab = levenshtein(a, b);
        const std::size_t ba = levenshtein(b, a);
        const std::size_t ac = levenshtein(a, c);
        const std::size_t cb = levenshtein(c, b);
        CHECK(ab == ba);                       // symmetry
        CHECK((ab == 0) == (a == b));          // identity
        CHECK(ab <= ac + cb);                  // triangle inequality
        CHECK(ab >= (a.size() > b.size() ? a.size() - b.size() : b.size() - a.size()));
    }
}

TEST_CASE("char_variation") {
    CHECK(char_variation(U"aaa") == 1);
    CHECK(char_variation(U"") == 0);
    CHECK(char_variation_utf8(default_charset()) == 95);
}

TEST_CASE("cost_experiment records the six variables with their invariants") {
    Seq2SeqConfig config = fast_config();
    config.max_iterations = 5;
    const std::vector<EvalRecord> records = cost_experiment(10, 40, 3, config, 123);
    REQUIRE(records.size() == 3);
    CHECK(records.front().plaintext_len == 10);
    CHECK(records[1].plaintext_len == 25);
    CHECK(records.back().plaintext_len == 40);
    for (const auto& r : records) {
        const std::size_t diff = r.plaintext_len > r.ciphertext_len
                                     ? r.plaintext_len - r.ciphertext_len
                                     : r.ciphertext_len - r.plaintext_len;
        CHECK(r.lev_distance >= diff);
        CHECK(r.ciphertext_len <= 30);
        if (r.ciphertext_len > 0) {
            CHECK(r.char_variation >= 1);
            CHECK(r.char_variation <= r.ciphertext_len);
        }
        CHECK(r.encrypt_time_s > 0.0);
        CHECK(r.keygen_time_s > 0.0);
    }
}

TEST_CASE("cost_experiment with two points hits exactly the endpoints") {
    Seq2SeqConfig config = fast_config();
    config.max_iterations = 2;
    const auto records = cost_experiment(5, 17, 2, config, 9);
    REQUIRE(records.size() == 2);
    CHECK(records[0].plaintext_len == 5);
    CHECK(records[1].plaintext_len == 17);
}

TEST_CASE("cost_experiment validates its range") {
    CHECK_THROWS_AS(cost_experiment(10, 10, 2, fast_config(), 1), std::invalid_argument);
    CHECK_THROWS_AS(cost_experiment(0, 10, 2, fast_config(), 1), std::invalid_argument);
    CHECK_THROWS_AS(cost_experiment(1, 10, 1, fast_config(), 1), std::invalid_argument);
}

TEST_CASE("correlation matrix: unit diagonal and perfect linearity") {
    std::vector<EvalRecord> records;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 12; ++i) {
        EvalRecord r;
        r.plaintext_len = 10 + static_cast<std::size_t>(i) * 7;
        r.lev_distance = static_cast<std::size_t>(rng() % 100);
        r.encrypt_time_s = 0.25;  // constant column -> undefined correlations
        r.keygen_time_s = 2.0 * static_cast<double>(r.plaintext_len);
        r.char_variation = 1 + static_cast<std::size_t>(rng() % 60);
        r.ciphertext_len = 60 + static_cast<std::size_t>(rng() % 5);
        records.push_back(r);
    }
    const CorrelationMatrix m = correlation_matrix(records);
    for (int i = 0; i < 6; ++i) {
        if (i == 2) continue;
        CHECK(m[i][i] == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(m[0][3] == doctest::Approx(1.0).epsilon(1e-9));  // len vs keygen time
    CHECK(std::isnan(m[2][2]));
    CHECK(std::isnan(m[0][2]));
    CHECK(m[0][1] == doctest::Approx(m[1][0]).epsilon(1e-12));
}

TEST_CASE("correlation matrix matches the two-pass oracle on random data") {
    std::vector<EvalRecord> records;
    std::mt19937_64 rng(31);
    auto unit = [&] { return static_cast<double>(rng() % 10007) / 10007.0; };
    for (int i = 0; i < 40; ++i) {
        EvalRecord r;
        r.plaintext_len = 1 + static_cast<std::size_t>(rng() % 4000);
        r.lev_distance = static_cast<std::size_t>(rng() % 4000);
        r.encrypt_time_s = unit();
        r.keygen_time_s = unit() * 10;
        r.char_variation = static_cast<std::size_t>(rng() % 95);
        r.ciphertext_len = static_cast<std::size_t>(rng() % 100);
        records.push_back(r);
    }
    const CorrelationMatrix m = correlation_matrix(records);

    std::array<std::vector<double>, 6> cols;
    for (const auto& r : records) {
        cols[0].push_back(static_cast<double>(r.plaintext_len));
        cols[1].push_back(static_cast<double>(r.lev_distance));
        cols[2].push_back(r.encrypt_time_s);
        cols[3].push_back(r.keygen_time_s);
        cols[4].push_back(static_cast<double>(r.char_variation));
        cols[5].push_back(static_cast<double>(r.ciphertext_len));
    }
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            if (i == j) continue;
            const double expect = oracles::pearson_two_pass(cols[i], cols[j]);
            CHECK(m[i][j] == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("correlation matrix needs at least three records") {
    CHECK_THROWS_AS(correlation_matrix({}), InsufficientDataError);
    CHECK_THROWS_AS(correlation_matrix(std::vector<EvalRecord>(2)), InsufficientDataError);
}

TEST_CASE("stealth_benchmark aggregates a paired corpus") {
    const auto dir = std::filesystem::temp_directory_path() / "dobf_stealth_unit";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    write_pair(dir, "alpha", "print('hello world from alpha')\n", "XXootherjunkstring__42//\n");
    write_pair(dir, "beta", "ab", "ba");  // tiny pair, reversed benchmark
    write_pair(dir, "gamma", "same text", "same text");  // degenerate: distance 0

    const StealthReport report = stealth_benchmark(dir, 3, fast_config(), 77, 1);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].set_id == "alpha");
    CHECK(report.rows[1].set_id == "beta");
    CHECK(report.rows[1].benchmark_distance == 2);  // "ab" -> "ba"
    CHECK(report.rows[1].benchmark_distance ==
          oracles::lev_recursive(U"ab", U"ba"));
    CHECK(report.rows[2].excluded);
    CHECK(std::isnan(report.rows[2].ratio));
    CHECK(report.aggregates.total_trials == 9);
    for (const auto& row : report.rows) {
        CHECK(row.trials == 3);
        if (!row.excluded) {
            CHECK(row.ratio ==
                  doctest::Approx(row.proposed_mean_distance / row.benchmark_distance));
        }
    }
    // leave-one-out means cover exactly the retained rows
    CHECK(report.aggregates.mean_ratio_excl.size() == 2);
    CHECK(report.aggregates.mean_ratio_excl.count("alpha") == 1);
    CHECK(report.aggregates.mean_ratio_excl.at("alpha") ==
          doctest::Approx(report.rows[1].ratio));

    // identical results regardless of worker count
    const StealthReport parallel = stealth_benchmark(dir, 3, fast_config(), 77, 4);
    REQUIRE(parallel.rows.size() == report.rows.size());
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(parallel.rows[i].proposed_mean_distance ==
              report.rows[i].proposed_mean_distance);
    }

    std::filesystem::remove_all(dir);
}

TEST_CASE("stealth_benchmark rejects broken corpora") {
    const auto dir = std::filesystem::temp_directory_path() / "dobf_stealth_broken";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    CHECK_THROWS_AS(stealth_benchmark(dir, 1, fast_config(), 1, 1), CorpusError);

    std::ofstream(dir / "solo.deobf") << "text";
    CHECK_THROWS_AS(stealth_benchmark(dir, 1, fast_config(), 1, 1), CorpusError);

    std::ofstream(dir / "solo.obf-benchmark") << "junk";
    std::ofstream(dir / "stray.obf-benchmark") << "junk";
    CHECK_THROWS_AS(stealth_benchmark(dir, 1, fast_config(), 1, 1), CorpusError);

    CHECK_THROWS_AS(stealth_benchmark(dir / "missing", 1, fast_config(), 1, 1), CorpusError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("csv outputs carry the documented columns") {
    Seq2SeqConfig config = fast_config();
    config.max_iterations = 2;
    const auto records = cost_experiment(5, 15, 3, config, 3);
    const std::string cost_csv = cost_records_csv(records);
    CHECK(cost_csv.rfind("plaintext_len,lev_distance,encrypt_time_s,keygen_time_s,"
                         "char_variation,ciphertext_len,seed\n",
                         0) == 0);
    CHECK(std::count(cost_csv.begin(), cost_csv.end(), '\n') == 4);  // header + 3 rows

    const CorrelationMatrix m = correlation_matrix(records);
    const std::string corr_csv = correlation_csv(m);
    CHECK(corr_csv.rfind("variable,plaintext_len,", 0) == 0);
    CHECK(std::count(corr_csv.begin(), corr_csv.end(), '\n') == 7);  // header + 6 rows

    const auto dir = std::filesystem::temp_directory_path() / "dobf_stealth_csv";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_pair(dir, "one", "some tiny program text", "completely different junk");
    write_pair(dir, "dup", "xyz", "xyz");
    const StealthReport report = stealth_benchmark(dir, 2, fast_config(), 5, 1);
    const std::string stealth_csv = stealth_report_csv(report);
    CHECK(stealth_csv.rfind("set_id,benchmark_distance,proposed_mean_distance,ratio,trials\n", 0) ==
          0);
    CHECK(stealth_csv.find("# mean_ratio=") != std::string::npos);
    CHECK(stealth_csv.find("# std_ratio=") != std::string::npos);
    CHECK(stealth_csv.find("# mean_normalized_distance=") != std::string::npos);
    CHECK(stealth_csv.find("# excluded_set=dup") != std::string::npos);
    std::filesystem::remove_all(dir);
}
