// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "forge/bpe.hpp"
#include "forge/dedup.hpp"
#include "forge/normalizer.hpp"
#include "forge/quality.hpp"

namespace {

// Persian-looking filler text: ~1 KB per paragraph.
std::string sample_text(std::size_t words, std::uint64_t seed) {
  static const char* letters[] = {"ا", "ب", "پ", "ت", "ج", "د", "ر", "ز", "س", "ش", "ک", "گ", "ل", "م", "ن", "و", "ه", "ی", "ي", "ك", "َ"};
  std::mt19937_64 rng(seed);
  std::string out;
  for (std::size_t w = 0; w < words; ++w) {
    const auto len = 2 + rng() % 6;
    for (std::size_t i = 0; i < len; ++i) out += letters[rng() % std::size(letters)];
    out += (w % 15 == 14) ? "\n" : " ";
  }
  return out;
}

void BM_Normalize(benchmark::State& state) {
  const auto text = sample_text(static_cast<std::size_t>(state.range(0)), 1);
  const auto& prof = forge::persian_default();
  for (auto _ : state) benchmark::DoNotOptimize(forge::normalize_text(text, prof));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Normalize)->Arg(200)->Arg(5000);

void BM_MinHash(benchmark::State& state) {
  const auto text = sample_text(static_cast<std::size_t>(state.range(0)), 2);
  forge::DedupParams p;
  for (auto _ : state) {
    const auto sh = forge::shingle(text, p.shingle_order);
    benchmark::DoNotOptimize(forge::minhash_signature(sh, p));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_MinHash)->Arg(200)->Arg(5000);

void BM_QualityStats(benchmark::State& state) {
  const forge::Document doc{"d", sample_text(1000, 3), "bench"};
  const auto& cfg = forge::default_quality_config();
  for (auto _ : state) benchmark::DoNotOptimize(forge::compute_quality_stats(doc, cfg.lexicons));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * doc.text.size()));
}
BENCHMARK(BM_QualityStats);

void BM_BpeEncode(benchmark::State& state) {
  std::vector<std::string> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back(sample_text(300, 100 + i));
  forge::BpeTrainOptions opt;
  opt.vocab_size = 1500;
  opt.byte_fallback = true;
  const forge::Tokenizer tok(forge::train_bpe(corpus, opt));
  const auto text = sample_text(2000, 4);
  for (auto _ : state) {
    // warm memo cache
    benchmark::DoNotOptimize(tok.encode(text));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_BpeEncode);

void BM_BpeTrain(benchmark::State& state) {
  std::vector<std::string> corpus;
  for (int i = 0; i < 100; ++i) corpus.push_back(sample_text(300, 500 + i));
  forge::BpeTrainOptions opt;
  opt.vocab_size = 800;
  for (auto _ : state) benchmark::DoNotOptimize(forge::train_bpe(corpus, opt));
}
BENCHMARK(BM_BpeTrain)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
