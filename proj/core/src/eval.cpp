#include "dobf/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <thread>

#include "dobf/cipher.hpp"
#include "dobf/errors.hpp"
#include "dobf/text.hpp"

namespace dobf {
namespace {

// Keeps the random-string stream distinct from the weight-draw stream that
// also starts from the trial seed.
constexpr std::uint64_t kStringStreamSalt = 0x9E3779B97F4A7C15ull;

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw CorpusError("read failed: " + path.string());
    return bytes;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string random_string(std::uint64_t seed, int length) {
    const std::string charset = default_charset();
    std::mt19937_64 rng(seed);
    std::string out;
    out.reserve(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) {
        out.push_back(charset[rng() % charset.size()]);
    }
    return out;
}

// Trains a fresh model on the (ciphertext, plaintext) pair for exactly
// `iterations` steps. Mirrors keygen's setup; early stopping is deliberately
// absent so the measured time tracks sequence length.
double timed_fixed_keygen(const std::string& plaintext_utf8, const std::string& ciphertext_utf8,
                          const Seq2SeqConfig& config, int iterations) {
    const std::u32string plaintext = utf8_decode(plaintext_utf8);
    const std::u32string ciphertext = utf8_decode(ciphertext_utf8);
    const CharVocab enc_vocab = CharVocab::from_chars(ciphertext, false);
    const CharVocab dec_vocab = CharVocab::from_text(plaintext, true);
    const IndexSequence input = encode_text(ciphertext, enc_vocab);
    const IndexSequence framed = frame_with_markers(plaintext, dec_vocab);

    Seq2SeqConfig train_config = config;
    train_config.input_vocab_size = static_cast<int>(enc_vocab.size());
    train_config.output_vocab_size = static_cast<int>(dec_vocab.size());
    train_config.validate();

    const auto started = std::chrono::steady_clock::now();
    ModelWeights w = init_random(train_config, 1);
    set_forget_gate_bias(w, 1.0f);
    Trainer trainer(w, train_config.learning_rate);
    for (int i = 0; i < iterations; ++i) trainer.step(input, framed);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
}

}  // namespace

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    if (a.size() < b.size()) std::swap(a, b);  // b is the shorter (column) string
    if (b.empty()) return a.size();

    std::vector<std::size_t> prev(b.size() + 1), curr(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;

    for (std::size_t i = 1; i <= a.size(); ++i) {
        curr[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, subst});
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

std::size_t levenshtein_utf8(std::string_view a, std::string_view b) {
    return levenshtein(utf8_decode(a), utf8_decode(b));
}

std::size_t char_variation(std::u32string_view text) {
    return std::set<char32_t>(text.begin(), text.end()).size();
}

std::size_t char_variation_utf8(std::string_view text) {
    return char_variation(utf8_decode(text));
}

StealthReport stealth_benchmark(const std::filesystem::path& corpus_dir, int trials_per_sample,
                                const Seq2SeqConfig& config, std::uint64_t seed, int jobs) {
    if (trials_per_sample < 1) throw std::invalid_argument("trials_per_sample must be >= 1");
    if (!std::filesystem::is_directory(corpus_dir)) {
        throw CorpusError("not a directory: " + corpus_dir.string());
    }

    std::vector<std::string> ids;
    std::set<std::string> benchmark_only;
    for (const auto& entry : std::filesystem::directory_iterator(corpus_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto path = entry.path();
        if (path.extension() == ".deobf") {
            ids.push_back(path.stem().string());
        } else if (path.extension() == ".obf-benchmark") {
            benchmark_only.insert(path.stem().string());
        }
    }
    if (ids.empty()) throw CorpusError("no <id>.deobf files in " + corpus_dir.string());
    std::sort(ids.begin(), ids.end());
    for (const std::string& id : ids) {
        const auto benchmark = corpus_dir / (id + ".obf-benchmark");
        if (!std::filesystem::exists(benchmark)) {
            throw CorpusError("missing pair file " + benchmark.string());
        }
        benchmark_only.erase(id);
    }
    if (!benchmark_only.empty()) {
        throw CorpusError("unpaired benchmark file " + *benchmark_only.begin() +
                          ".obf-benchmark in " + corpus_dir.string());
    }

    StealthReport report;
    report.rows.resize(ids.size());
    double normalized_sum = 0.0;

    for (std::size_t s = 0; s < ids.size(); ++s) {
        const std::string deobf_utf8 = read_file_bytes(corpus_dir / (ids[s] + ".deobf"));
        const std::string bench_utf8 = read_file_bytes(corpus_dir / (ids[s] + ".obf-benchmark"));
        const std::u32string deobf = utf8_decode(deobf_utf8);
        const std::u32string bench = utf8_decode(bench_utf8);

        StealthRow& row = report.rows[s];
        row.set_id = ids[s];
        row.trials = trials_per_sample;
        row.benchmark_distance = levenshtein(deobf, bench);

        std::vector<double> distances(static_cast<std::size_t>(trials_per_sample));
        std::vector<double> normalized(static_cast<std::size_t>(trials_per_sample));

        const auto run_trial = [&](int t) {
            Seq2SeqConfig trial_config = config;
            trial_config.seed = seed + static_cast<std::uint64_t>(s) * trials_per_sample +
                                static_cast<std::uint64_t>(t);
            const CipherRecord record = generate_ciphertext(deobf_utf8, default_charset(),
                                                            trial_config, kDefaultRandomnessIndex);
            const std::u32string ciphertext = utf8_decode(record.ciphertext);
            const std::size_t dist = levenshtein(deobf, ciphertext);
            distances[static_cast<std::size_t>(t)] = static_cast<double>(dist);
            const std::size_t longest = std::max(deobf.size(), ciphertext.size());
            normalized[static_cast<std::size_t>(t)] =
                longest == 0 ? 0.0 : static_cast<double>(dist) / static_cast<double>(longest);
        };

        if (jobs <= 1) {
            for (int t = 0; t < trials_per_sample; ++t) run_trial(t);
        } else {
            std::vector<std::thread> workers;
            const int stride = jobs;
            for (int worker = 0; worker < stride; ++worker) {
                workers.emplace_back([&, worker] {
                    for (int t = worker; t < trials_per_sample; t += stride) run_trial(t);
                });
            }
            for (auto& th : workers) th.join();
        }

        double sum = 0.0, nsum = 0.0;
        for (int t = 0; t < trials_per_sample; ++t) {
            sum += distances[static_cast<std::size_t>(t)];
            nsum += normalized[static_cast<std::size_t>(t)];
        }
        row.proposed_mean_distance = sum / trials_per_sample;
        row.mean_normalized_distance = nsum / trials_per_sample;
        normalized_sum += nsum;

        if (row.benchmark_distance == 0) {
            row.excluded = true;
            row.ratio = std::numeric_limits<double>::quiet_NaN();
        } else {
            row.ratio = row.proposed_mean_distance / static_cast<double>(row.benchmark_distance);
        }
    }

    auto& agg = report.aggregates;
    agg.total_trials = static_cast<int>(ids.size()) * trials_per_sample;
    agg.mean_normalized_distance = normalized_sum / agg.total_trials;

    std::vector<const StealthRow*> retained;
    for (const auto& row : report.rows) {
        if (!row.excluded) retained.push_back(&row);
    }
    if (!retained.empty()) {
        double sum = 0.0;
        for (const auto* row : retained) sum += row->ratio;
        agg.mean_ratio = sum / retained.size();
        double var = 0.0;
        for (const auto* row : retained) {
            const double d = row->ratio - agg.mean_ratio;
            var += d * d;
        }
        agg.std_ratio = std::sqrt(var / retained.size());  // population

        if (retained.size() > 1) {
            for (const auto* leave_out : retained) {
                double s2 = 0.0;
                for (const auto* row : retained) {
                    if (row != leave_out) s2 += row->ratio;
                }
                agg.mean_ratio_excl[leave_out->set_id] = s2 / (retained.size() - 1);
            }
        }
    }
    return report;
}

std::vector<EvalRecord> cost_experiment(int min_len, int max_len, int n_points,
                                        const Seq2SeqConfig& config, std::uint64_t seed) {
    if (min_len < 1 || min_len >= max_len) throw std::invalid_argument("need 1 <= min_len < max_len");
    if (n_points < 2) throw std::invalid_argument("n_points must be >= 2");

    std::vector<EvalRecord> records;
    records.reserve(static_cast<std::size_t>(n_points));

    for (int i = 0; i < n_points; ++i) {
        const double frac = static_cast<double>(i) / (n_points - 1);
        const int length = min_len + static_cast<int>(std::lround(frac * (max_len - min_len)));
        const std::uint64_t trial_seed = seed + static_cast<std::uint64_t>(i);

        const std::string plaintext = random_string(trial_seed ^ kStringStreamSalt, length);

        Seq2SeqConfig trial_config = config;
        trial_config.seed = trial_seed;

        const auto encrypt_started = std::chrono::steady_clock::now();
        const CipherRecord record =
            generate_ciphertext(plaintext, default_charset(), trial_config, kDefaultRandomnessIndex);
        const double encrypt_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - encrypt_started)
                .count();

        const double keygen_time =
            timed_fixed_keygen(plaintext, record.ciphertext, trial_config, config.max_iterations);

        const std::u32string plain32 = utf8_decode(plaintext);
        const std::u32string cipher32 = utf8_decode(record.ciphertext);

        EvalRecord rec;
        rec.plaintext_len = plain32.size();
        rec.lev_distance = levenshtein(plain32, cipher32);
        rec.encrypt_time_s = encrypt_time;
        rec.keygen_time_s = keygen_time;
        rec.char_variation = char_variation(cipher32);
        rec.ciphertext_len = cipher32.size();
        rec.seed = trial_seed;
        records.push_back(rec);
    }
    return records;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("pearson needs two equally sized series of length >= 2");
    }
    // One-pass co-moment accumulation (Welford style).
    double mean_x = 0.0, mean_y = 0.0, m2x = 0.0, m2y = 0.0, cxy = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double k = static_cast<double>(n + 1);
        const double dx = x[n] - mean_x;
        const double dy = y[n] - mean_y;
        mean_x += dx / k;
        mean_y += dy / k;
        m2x += dx * (x[n] - mean_x);
        m2y += dy * (y[n] - mean_y);
        cxy += dx * (y[n] - mean_y);
    }
    if (m2x <= 0.0 || m2y <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return cxy / std::sqrt(m2x * m2y);
}

CorrelationMatrix correlation_matrix(const std::vector<EvalRecord>& records) {
    if (records.size() < 3) {
        throw InsufficientDataError("correlation_matrix needs at least 3 records");
    }
    std::array<std::vector<double>, 6> cols;
    for (auto& c : cols) c.reserve(records.size());
    for (const auto& r : records) {
        cols[0].push_back(static_cast<double>(r.plaintext_len));
        cols[1].push_back(static_cast<double>(r.lev_distance));
        cols[2].push_back(r.encrypt_time_s);
        cols[3].push_back(r.keygen_time_s);
        cols[4].push_back(static_cast<double>(r.char_variation));
        cols[5].push_back(static_cast<double>(r.ciphertext_len));
    }

    CorrelationMatrix matrix{};
    for (int i = 0; i < 6; ++i) {
        for (int j = i; j < 6; ++j) {
            double value;
            if (i == j) {
                // unit diagonal, undefined for a constant column
                const double var = pearson(cols[i], cols[i]);
                value = std::isnan(var) ? var : 1.0;
            } else {
                value = pearson(cols[i], cols[j]);
            }
            matrix[i][j] = value;
            matrix[j][i] = value;
        }
    }
    return matrix;
}

std::string cost_records_csv(const std::vector<EvalRecord>& records) {
    std::string out =
        "plaintext_len,lev_distance,encrypt_time_s,keygen_time_s,char_variation,ciphertext_len,"
        "seed\n";
    for (const auto& r : records) {
        out += std::to_string(r.plaintext_len) + "," + std::to_string(r.lev_distance) + "," +
               format_double(r.encrypt_time_s) + "," + format_double(r.keygen_time_s) + "," +
               std::to_string(r.char_variation) + "," + std::to_string(r.ciphertext_len) + "," +
               std::to_string(r.seed) + "\n";
    }
    return out;
}

std::string stealth_report_csv(const StealthReport& report) {
    std::string out = "set_id,benchmark_distance,proposed_mean_distance,ratio,trials\n";
    for (const auto& row : report.rows) {
        out += row.set_id + "," + std::to_string(row.benchmark_distance) + "," +
               format_double(row.proposed_mean_distance) + "," +
               (row.excluded ? "" : format_double(row.ratio)) + "," + std::to_string(row.trials) +
               "\n";
    }
    const auto& agg = report.aggregates;
    for (const auto& row : report.rows) {
        if (row.excluded) {
            out += "# excluded_set=" + row.set_id + " reason=zero_benchmark_distance\n";
        }
    }
    out += "# mean_ratio=" + format_double(agg.mean_ratio) + "\n";
    out += "# std_ratio=" + format_double(agg.std_ratio) + " (population)\n";
    for (const auto& [id, mean] : agg.mean_ratio_excl) {
        out += "# mean_ratio_excl_" + id + "=" + format_double(mean) + "\n";
    }
    out += "# mean_normalized_distance=" + format_double(agg.mean_normalized_distance) + "\n";
    out += "# total_trials=" + std::to_string(agg.total_trials) + "\n";
    return out;
}

std::string correlation_csv(const CorrelationMatrix& matrix) {
    std::string out = "variable";
    for (const char* name : kEvalVariableNames) out += std::string(",") + name;
    out += "\n";
    for (int i = 0; i < 6; ++i) {
        out += kEvalVariableNames[i];
        for (int j = 0; j < 6; ++j) {
            out += ",";
            if (!std::isnan(matrix[i][j])) out += format_double(matrix[i][j]);
        }
        out += "\n";
    }
    return out;
}

}  // namespace dobf
