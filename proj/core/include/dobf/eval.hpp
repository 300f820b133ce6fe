#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dobf/seq2seq.hpp"

namespace dobf {

/// Unit-cost edit distance (insert/delete/substitute), O(|a|*|b|) time and
/// O(min(|a|,|b|)) memory. Symmetric.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein_utf8(std::string_view a, std::string_view b);

/// Number of distinct characters (Unicode scalar values) in `text`.
std::size_t char_variation(std::u32string_view text);
std::size_t char_variation_utf8(std::string_view text);

/// One row of the execution-cost experiment: the six logged variables plus
/// the trial seed.
struct EvalRecord {
    std::size_t plaintext_len = 0;
    std::size_t lev_distance = 0;
    double encrypt_time_s = 0.0;
    double keygen_time_s = 0.0;
    std::size_t char_variation = 0;
    std::size_t ciphertext_len = 0;
    std::uint64_t seed = 0;
};

inline constexpr std::array<const char*, 6> kEvalVariableNames = {
    "plaintext_len",  "lev_distance",   "encrypt_time_s",
    "keygen_time_s", "char_variation", "ciphertext_len"};

struct StealthRow {
    std::string set_id;
    std::size_t benchmark_distance = 0;
    double proposed_mean_distance = 0.0;
    double ratio = 0.0;  // NaN when excluded
    int trials = 0;
    bool excluded = false;  // benchmark_distance == 0, ratio undefined
    double mean_normalized_distance = 0.0;  // mean lev(p,c)/max(|p|,|c|)
};

struct StealthAggregates {
    double mean_ratio = 0.0;  // population statistics over retained rows
    double std_ratio = 0.0;
    std::map<std::string, double> mean_ratio_excl;  // mean with one set left out
    double mean_normalized_distance = 0.0;          // across every trial
    int total_trials = 0;
};

struct StealthReport {
    std::vector<StealthRow> rows;
    StealthAggregates aggregates;
};

/// Benchmarks generated ciphertexts against reference obfuscations. The
/// corpus directory holds paired files <id>.deobf / <id>.obf-benchmark.
/// For each pair, `trials_per_sample` ciphertexts of the deobfuscated text
/// are generated with per-trial seeds derived from `seed`, and edit
/// distances to the original are aggregated. Pairs whose benchmark
/// distance is zero are flagged and excluded from aggregates. Trials may
/// run on `jobs` threads; results are identical regardless of job count.
/// Throws CorpusError on missing or unpaired files.
StealthReport stealth_benchmark(const std::filesystem::path& corpus_dir, int trials_per_sample,
                                const Seq2SeqConfig& config, std::uint64_t seed, int jobs = 1);

/// Sweeps plaintext length from min_len to max_len over n_points evenly
/// spaced values; each point obfuscates a random string over the default
/// charset and trains a key for exactly config.max_iterations iterations
/// (no early stopping), so keygen time reflects length rather than
/// convergence luck. Timing trials run serialized on the calling thread.
std::vector<EvalRecord> cost_experiment(int min_len, int max_len, int n_points,
                                        const Seq2SeqConfig& config, std::uint64_t seed);

/// Pearson correlation; NaN when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// 6x6 Pearson matrix over the EvalRecord variables, kEvalVariableNames
/// order. Zero-variance columns produce NaN entries (reported as missing
/// in CSV). Throws InsufficientDataError for fewer than 3 records.
using CorrelationMatrix = std::array<std::array<double, 6>, 6>;
CorrelationMatrix correlation_matrix(const std::vector<EvalRecord>& records);

std::string cost_records_csv(const std::vector<EvalRecord>& records);
std::string stealth_report_csv(const StealthReport& report);
std::string correlation_csv(const CorrelationMatrix& matrix);

}  // namespace dobf
