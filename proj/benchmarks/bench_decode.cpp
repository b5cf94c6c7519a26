// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
//
// Greedy decode latency against utterance length on a desk-scale model.

#include <benchmark/benchmark.h>

#include <random>

#include "snnt/decode.hpp"
#include "snnt/profiler.hpp"

namespace {

using namespace snnt;

void decode_length(benchmark::State& state, const std::string& enc,
                   const std::string& pred) {
  const int T = static_cast<int>(state.range(0));
  TransducerConfig cfg =
      make_transducer_config(enc, 2, 64, pred, 64, /*input_dim=*/16, /*vocab=*/8,
                             /*embedding_dim=*/10, /*joint_dim=*/64);
  TransducerModel model = timing_model(cfg, 3);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor features({T, 16});
  for (int64_t i = 0; i < features.size(); ++i) features[i] = normal(rng);

  for (auto _ : state) {
    DecodeResult result = greedy_decode(model, features);
    benchmark::DoNotOptimize(result.log_prob);
  }
  state.SetComplexityN(T);
}

void BM_GreedyDecodeSsnuOR(benchmark::State& state) {
  decode_length(state, "sSNU-o R", "sSNU-a R");
}
void BM_GreedyDecodeLstm(benchmark::State& state) {
  decode_length(state, "LSTM", "LSTM");
}

}  // namespace

BENCHMARK(BM_GreedyDecodeSsnuOR)->RangeMultiplier(2)->Range(32, 256)->Complexity();
BENCHMARK(BM_GreedyDecodeLstm)->RangeMultiplier(2)->Range(32, 256)->Complexity();

BENCHMARK_MAIN();
