#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "dobf/cipher.hpp"
#include "dobf/eval.hpp"
#include "dobf/keygen.hpp"
#include "dobf/sha256.hpp"
#include "dobf/text.hpp"

namespace {

std::string random_source(std::size_t length, std::uint64_t seed) {
    const std::string charset = dobf::default_charset();
    std::mt19937_64 rng(seed);
    std::string out;
    out.reserve(length);
    for (std::size_t i = 0; i < length; ++i) out.push_back(charset[rng() % charset.size()]);
    return out;
}

void BM_GenerateCiphertext(benchmark::State& state) {
    const std::string plaintext = random_source(static_cast<std::size_t>(state.range(0)), 1);
    dobf::Seq2SeqConfig config;
    config.hidden_size = static_cast<int>(state.range(1));
    config.max_decode_len = 100;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        config.seed = seed++;
        benchmark::DoNotOptimize(
            dobf::generate_ciphertext(plaintext, dobf::default_charset(), config, 10));
    }
}
BENCHMARK(BM_GenerateCiphertext)->Args({100, 64})->Args({1000, 64})->Args({1000, 256});

void BM_TrainStep(benchmark::State& state) {
    const std::string plaintext = random_source(static_cast<std::size_t>(state.range(0)), 2);
    dobf::Seq2SeqConfig config;
    config.hidden_size = static_cast<int>(state.range(1));
    config.max_decode_len = 100;
    config.seed = 3;
    const dobf::CipherRecord cipher =
        dobf::generate_ciphertext(plaintext, dobf::default_charset(), config, 10);

    const std::u32string plain32 = dobf::utf8_decode(plaintext);
    const std::u32string cipher32 = dobf::utf8_decode(cipher.ciphertext);
    const dobf::CharVocab enc_vocab = dobf::CharVocab::from_chars(cipher32, false);
    const dobf::CharVocab dec_vocab = dobf::CharVocab::from_text(plain32, true);
    const dobf::IndexSequence input = dobf::encode_text(cipher32, enc_vocab);
    const dobf::IndexSequence framed = dobf::frame_with_markers(plain32, dec_vocab);

    config.input_vocab_size = static_cast<int>(enc_vocab.size());
    config.output_vocab_size = static_cast<int>(dec_vocab.size());
    dobf::ModelWeights weights = dobf::init_random(config, 1);
    dobf::Trainer trainer(weights, config.learning_rate);

    for (auto _ : state) {
        benchmark::DoNotOptimize(trainer.step(input, framed));
    }
}
BENCHMARK(BM_TrainStep)->Args({100, 64})->Args({300, 64})->Args({100, 256});

void BM_Levenshtein(benchmark::State& state) {
    const std::string a = random_source(static_cast<std::size_t>(state.range(0)), 4);
    const std::string b = random_source(static_cast<std::size_t>(state.range(0)), 5);
    const std::u32string a32 = dobf::utf8_decode(a);
    const std::u32string b32 = dobf::utf8_decode(b);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dobf::levenshtein(a32, b32));
    }
}
BENCHMARK(BM_Levenshtein)->Arg(100)->Arg(1000)->Arg(4000);

void BM_Sha256(benchmark::State& state) {
    const std::string data = random_source(static_cast<std::size_t>(state.range(0)), 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dobf::sha256(data));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_Sha256)->Arg(1 << 10)->Arg(1 << 20);

}  // namespace

BENCHMARK_MAIN();
