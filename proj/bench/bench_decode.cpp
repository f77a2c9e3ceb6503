// Serial reference decoders against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <map>

#include "morphdis/decoder.hpp"
#include "morphdis/synthetic.hpp"

using namespace morphdis;

namespace {

struct Fixture {
  ModelState model;
  std::vector<EncodedSentence> sents;
};

// Default-size network over a synthetic vocabulary, window n.
const Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const TagsetConfig cfg = turkish_tagset();
  SyntheticOptions so;
  so.sentences = 400;
  so.min_length = 10;
  so.max_length = 30;
  so.ambiguous_rate = 0.8;
  const auto raw = synthetic_corpus(so, cfg);
  const Vocabularies v = build_vocabularies(raw, cfg, 1);
  Hyper h;
  h.window = n;
  Fixture f{init_params(v, h, cfg), encode_corpus(raw, cfg, v)};
  return cache.emplace(n, std::move(f)).first->second;
}

std::size_t token_count(const Fixture& f) {
  std::size_t n = 0;
  for (const auto& s : f.sents) n += s.tokens.size();
  return n;
}

void BM_Viterbi(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  const DecodeOptions opt{static_cast<std::size_t>(state.range(1)), 1};
  for (auto _ : state)
    for (const auto& s : f.sents) benchmark::DoNotOptimize(viterbi(s, f.model, opt));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(token_count(f)));
}

void BM_ViterbiOmp(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  const DecodeOptions opt{static_cast<std::size_t>(state.range(1)),
                          static_cast<std::size_t>(state.range(2))};
  for (auto _ : state)
    for (const auto& s : f.sents) benchmark::DoNotOptimize(viterbi_omp(s, f.model, opt));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(token_count(f)));
}

void BM_DecodeCorpusSerial(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(decode_corpus_serial(f.sents, f.model));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(token_count(f)));
}

void BM_DecodeCorpus(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  const DecodeOptions opt{0, static_cast<std::size_t>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(decode_corpus(f.sents, f.model, opt));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(token_count(f)));
}

}  // namespace

// Args: window, lattice order (0 = default)[, threads].
BENCHMARK(BM_Viterbi)->Args({3, 0})->Args({5, 0})->Args({5, 2})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ViterbiOmp)
    ->Args({3, 0, 1})->Args({5, 0, 1})->Args({5, 2, 1})->Args({5, 2, 4})
    ->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DecodeCorpusSerial)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodeCorpus)
    ->Args({3, 1})->Args({3, 2})->Args({3, 4})->Args({5, 4})
    ->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
