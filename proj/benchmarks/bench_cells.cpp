// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
//
// Single-step transition cost per unit variant at the reference encoder
// width. Run: ./benchmarks/bench_cells [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include <random>

#include "snnt/cells.hpp"

namespace {

using namespace snnt;

void run_steps(benchmark::State& state, const std::string& variant) {
  const int n = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  CellConfig cfg = cell_config_from_name(variant);
  cfg.input_size = m;
  cfg.units = n;
  std::mt19937_64 rng(1);
  CellParams params = CellParams::init(cfg, rng);

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Tensor x({m});
  for (int64_t i = 0; i < x.size(); ++i) x[i] = unit(rng);

  for (auto _ : state) {
    Graph g;
    BoundCell cell = bind_cell(g, params, "c");
    CellState s = initial_cell_state(g, cfg);
    Value input = g.constant(x);
    for (int t = 0; t < 16; ++t) {
      auto [y, next] = cell_step(g, cell, s, input);
      s = next;
      benchmark::DoNotOptimize(y.tensor().data());
    }
  }
  state.SetItemsProcessed(state.iterations() * 16);
}

void BM_SsnuR(benchmark::State& state) { run_steps(state, "sSNU R"); }
void BM_SsnuAR(benchmark::State& state) { run_steps(state, "sSNU-a R"); }
void BM_SsnuORecurrent(benchmark::State& state) { run_steps(state, "sSNU-o R"); }
void BM_Lstm(benchmark::State& state) { run_steps(state, "LSTM"); }

}  // namespace

BENCHMARK(BM_SsnuR)->Args({640, 1280});
BENCHMARK(BM_SsnuAR)->Args({640, 1280});
BENCHMARK(BM_SsnuORecurrent)->Args({640, 1280});
BENCHMARK(BM_Lstm)->Args({640, 1280});

BENCHMARK_MAIN();
