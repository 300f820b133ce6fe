// dobf: obfuscate source files through a randomly weighted encoder-decoder,
// train deobfuscation keys, run the recovered code, and benchmark the whole
// pipeline.
//
// Exit codes: 0 success, 1 IO/usage error, 2 key generation failure,
// 3 verification failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dobf/cipher.hpp"
#include "dobf/errors.hpp"
#include "dobf/eval.hpp"
#include "dobf/key_store.hpp"
#include "dobf/keygen.hpp"
#include "dobf/runner.hpp"
#include "dobf/text.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitKeygenFailed = 2;
constexpr int kExitVerification = 3;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw dobf::IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw dobf::IoError("read failed: " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw dobf::IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw dobf::IoError("write failed: " + path.string());
}

struct SeedOption {
    std::uint64_t value = 0;
    CLI::Option* option = nullptr;

    void attach(CLI::App* cmd) {
        option = cmd->add_option("--seed", value, "RNG seed (omit for OS entropy)")
                     ->envname("DOBF_SEED");
    }

    // Resolution order: flag > config file > DOBF_SEED > OS entropy. The
    // first three are handled by CLI11; entropy fills in last and the drawn
    // value is reported in the command's JSON output.
    std::uint64_t resolve() {
        if (option && option->count() > 0) return value;
        std::random_device rd;
        value = (static_cast<std::uint64_t>(rd()) << 32) | rd();
        std::cerr << "note: no seed given, drew " << value << " from OS entropy\n";
        return value;
    }
};

struct ObfuscateArgs {
    std::string input, output_base, charset_file;
    int hidden = 256;
    int max_decode_len = 100;
    int randomness_index = dobf::kDefaultRandomnessIndex;
    SeedOption seed;
};

struct KeygenArgs {
    std::string plaintext_path, cipher_path, output_path;
    int hidden = 64;  // desk-scale default; raise for large inputs
    int max_iterations = 2000;
    int check_interval = 50;
    int max_attempts = dobf::kDefaultMaxAttempts;
    int max_decode_len = 100;
    double learning_rate = 1e-2;
    SeedOption seed;
};

struct RunArgs {
    std::string cipher_path, key_path, exec_cmd;
    bool unverified = false;
};

struct EvalCostArgs {
    int min_len = 10, max_len = 400, n_points = 20;
    int iterations = 200;
    int hidden = 64;
    int max_decode_len = 100;
    std::string out_dir = ".";
    SeedOption seed;
};

struct EvalStealthArgs {
    std::string corpus_dir;
    int trials = 100;
    int hidden = 64;
    int max_decode_len = 100;
    int jobs = 1;
    std::string out_dir = ".";
    SeedOption seed;
};

int cmd_obfuscate(ObfuscateArgs& args) {
    const std::string plaintext = read_file(args.input);
    const std::string charset =
        args.charset_file.empty() ? dobf::default_charset() : read_file(args.charset_file);

    dobf::Seq2SeqConfig config;
    config.hidden_size = args.hidden;
    config.max_decode_len = args.max_decode_len;
    config.seed = args.seed.resolve();

    const dobf::CipherRecord record =
        dobf::generate_ciphertext(plaintext, charset, config, args.randomness_index);
    dobf::write_cipher_files(record, args.output_base);

    nlohmann::json out;
    out["out"] = args.output_base + ".obf";
    out["ciphertext_len"] = dobf::utf8_decode(record.ciphertext).size();
    out["seed"] = record.seed;
    out["n"] = record.randomness_index;
    out["charset_id"] = record.charset_id;
    std::cout << out.dump() << "\n";
    return kExitOk;
}

int cmd_keygen(KeygenArgs& args) {
    const std::string plaintext = read_file(args.plaintext_path);
    bool have_meta = false;
    const dobf::CipherRecord cipher = dobf::read_cipher_files(args.cipher_path, &have_meta);
    if (!have_meta) {
        throw dobf::IoError("missing sidecar " + args.cipher_path + ".meta.json");
    }

    dobf::Seq2SeqConfig config;
    config.hidden_size = args.hidden;
    config.max_iterations = args.max_iterations;
    config.check_interval = args.check_interval;
    config.max_decode_len = args.max_decode_len;
    config.learning_rate = args.learning_rate;
    config.seed = args.seed.resolve();

    nlohmann::json out;
    out["key"] = args.output_path;
    out["seed"] = config.seed;
    try {
        auto [key, report] = dobf::generate_key(plaintext, cipher, config, args.max_attempts);
        dobf::save_key(key, args.output_path);

        const dobf::KeyFile reloaded = dobf::load_key(args.output_path);
        const bool verified = dobf::verify_roundtrip(reloaded, cipher.ciphertext, plaintext);

        out["success"] = report.success;
        out["verified"] = verified;
        out["iterations_used"] = report.iterations_used;
        out["attempts"] = report.attempts;
        out["final_loss"] = report.final_loss;
        out["wall_time_s"] = report.wall_time_s;
        std::cout << out.dump() << "\n";
        if (!verified) {
            std::cerr << "error: saved key failed round-trip verification\n";
            return kExitKeygenFailed;
        }
        return kExitOk;
    } catch (const dobf::KeyGenFailedError& e) {
        out["success"] = false;
        out["verified"] = false;
        out["attempts"] = e.attempts;
        std::cout << out.dump() << "\n";
        std::cerr << "error: " << e.what() << "\n";
        return kExitKeygenFailed;
    }
}

int cmd_run(RunArgs& args) {
    bool have_meta = false;
    const dobf::CipherRecord cipher = dobf::read_cipher_files(args.cipher_path, &have_meta);
    const dobf::KeyFile key = dobf::load_key(args.key_path);

    std::optional<dobf::Sha256Digest> expected;
    if (have_meta && !args.unverified) expected = cipher.plaintext_sha256;

    if (args.exec_cmd.empty()) {
        // decode-only mode
        const std::string plaintext = dobf::deobfuscate(cipher.ciphertext, key);
        const dobf::Sha256Digest digest = dobf::sha256(plaintext);

        nlohmann::json out;
        out["sha256"] = dobf::to_hex(digest);
        out["plaintext_len"] = dobf::utf8_decode(plaintext).size();
        if (expected) {
            const bool ok = digest == *expected;
            out["verified"] = ok;
            std::cout << out.dump() << "\n";
            if (!ok) {
                std::cerr << "error: recovered plaintext does not match the recorded digest\n";
                return kExitVerification;
            }
        } else {
            out["verified"] = nullptr;  // nothing to check against
            std::cout << out.dump() << "\n";
        }
        return kExitOk;
    }

    try {
        const dobf::ExecutionResult result =
            dobf::execute(cipher.ciphertext, key, args.exec_cmd, expected);
        std::cout << result.stdout_text;
        std::cerr << result.stderr_text;
        std::cerr << "note: child exited " << result.exit_code << " after " << result.duration_s
                  << "s\n";
        return result.exit_code;
    } catch (const dobf::DigestMismatchError&) {
        std::cerr << "error: verification failed, refusing to execute\n";
        return kExitVerification;
    }
}

int cmd_eval_cost(EvalCostArgs& args) {
    dobf::Seq2SeqConfig config;
    config.hidden_size = args.hidden;
    config.max_iterations = args.iterations;
    config.max_decode_len = args.max_decode_len;
    const std::uint64_t seed = args.seed.resolve();

    const std::vector<dobf::EvalRecord> records =
        dobf::cost_experiment(args.min_len, args.max_len, args.n_points, config, seed);
    const dobf::CorrelationMatrix matrix = dobf::correlation_matrix(records);

    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    const auto cost_path = dir / "cost.csv";
    const auto corr_path = dir / "cost_correlation.csv";
    write_file(cost_path, dobf::cost_records_csv(records));
    write_file(corr_path, dobf::correlation_csv(matrix));

    nlohmann::json out;
    out["records"] = records.size();
    out["seed"] = seed;
    out["cost_csv"] = cost_path.string();
    out["correlation_csv"] = corr_path.string();
    std::cout << out.dump() << "\n";
    return kExitOk;
}

int cmd_eval_stealth(EvalStealthArgs& args) {
    dobf::Seq2SeqConfig config;
    config.hidden_size = args.hidden;
    config.max_decode_len = args.max_decode_len;
    const std::uint64_t seed = args.seed.resolve();

    const dobf::StealthReport report =
        dobf::stealth_benchmark(args.corpus_dir, args.trials, config, seed, args.jobs);

    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    const auto csv_path = dir / "stealth.csv";
    write_file(csv_path, dobf::stealth_report_csv(report));

    nlohmann::json out;
    out["sets"] = report.rows.size();
    out["total_trials"] = report.aggregates.total_trials;
    out["mean_ratio"] = report.aggregates.mean_ratio;
    out["std_ratio"] = report.aggregates.std_ratio;
    out["mean_normalized_distance"] = report.aggregates.mean_normalized_distance;
    out["seed"] = seed;
    out["stealth_csv"] = csv_path.string();
    std::cout << out.dump() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dobf: neural source-code obfuscation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file (flags take precedence)");

    ObfuscateArgs obf_args;
    CLI::App* obf = app.add_subcommand("obfuscate", "Turn a source file into a ciphertext");
    obf->add_option("-i,--input", obf_args.input, "plaintext source file")->required();
    obf->add_option("-o,--output", obf_args.output_base,
                    "output base path (writes <base>.obf and <base>.obf.meta.json)")
        ->required();
    obf->add_option("--n", obf_args.randomness_index, "randomness index (weight redraw count)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    obf->add_option("--hidden", obf_args.hidden, "hidden state size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    obf->add_option("--max-decode-len", obf_args.max_decode_len, "ciphertext length cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    obf->add_option("--charset-file", obf_args.charset_file,
                    "file holding the output character set (default: printable ASCII)");
    obf_args.seed.attach(obf);

    KeygenArgs key_args;
    CLI::App* key = app.add_subcommand("keygen", "Train the deobfuscation key for a ciphertext");
    key->add_option("-p,--plaintext", key_args.plaintext_path, "original source file")->required();
    key->add_option("-c,--cipher", key_args.cipher_path,
                    "ciphertext file (expects sibling .meta.json)")
        ->required();
    key->add_option("-o,--output", key_args.output_path, "key output path (.dobk)")->required();
    key->add_option("--hidden", key_args.hidden, "hidden state size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    key->add_option("--max-iterations", key_args.max_iterations, "training iterations per attempt")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    key->add_option("--check-interval", key_args.check_interval,
                    "iterations between round-trip checks")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    key->add_option("--max-attempts", key_args.max_attempts, "re-initialization attempts")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    key->add_option("--learning-rate", key_args.learning_rate, "RMSprop learning rate")
        ->capture_default_str();
    key->add_option("--max-decode-len", key_args.max_decode_len,
                    "decode cap stored in the key (raised to plaintext length automatically)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    key_args.seed.attach(key);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Recover (and optionally execute) obfuscated code");
    run->add_option("-c,--cipher", run_args.cipher_path, "ciphertext file")->required();
    run->add_option("-k,--key", run_args.key_path, "key file (.dobk)")->required();
    run->add_option("--exec", run_args.exec_cmd,
                    "interpreter command template with a {file} placeholder");
    run->add_flag("--unverified", run_args.unverified,
                  "skip digest verification before executing");

    CLI::App* eval = app.add_subcommand("eval", "Benchmark harnesses");
    eval->require_subcommand(1);

    EvalCostArgs cost_args;
    CLI::App* cost = eval->add_subcommand("cost", "Length sweep of the six logged variables");
    cost->add_option("--min", cost_args.min_len, "minimum plaintext length")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cost->add_option("--max", cost_args.max_len, "maximum plaintext length")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cost->add_option("--points", cost_args.n_points, "number of sweep points")
        ->check(CLI::Range(2, 1 << 20))
        ->capture_default_str();
    cost->add_option("--iterations", cost_args.iterations,
                     "fixed keygen iteration count (no early stop)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cost->add_option("--hidden", cost_args.hidden, "hidden state size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cost->add_option("--out-dir", cost_args.out_dir, "output directory for CSV files")
        ->capture_default_str();
    cost_args.seed.attach(cost);

    EvalStealthArgs stealth_args;
    CLI::App* stealth =
        eval->add_subcommand("stealth", "Edit-distance comparison against a paired corpus");
    stealth->add_option("--corpus", stealth_args.corpus_dir,
                        "directory of <id>.deobf / <id>.obf-benchmark pairs")
        ->required();
    stealth->add_option("--trials", stealth_args.trials, "ciphertexts per sample")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    stealth->add_option("--hidden", stealth_args.hidden, "hidden state size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    stealth->add_option("--jobs", stealth_args.jobs, "worker threads for trials")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    stealth->add_option("--out-dir", stealth_args.out_dir, "output directory for the CSV")
        ->capture_default_str();
    stealth_args.seed.attach(stealth);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (obf->parsed()) return cmd_obfuscate(obf_args);
        if (key->parsed()) return cmd_keygen(key_args);
        if (run->parsed()) return cmd_run(run_args);
        if (cost->parsed()) return cmd_eval_cost(cost_args);
        if (stealth->parsed()) return cmd_eval_stealth(stealth_args);
    } catch (const dobf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
