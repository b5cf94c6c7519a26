// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnt/transducer.hpp"

namespace snnt {

// Analytic cost model. Parameters count exactly the tensors a variant row
// instantiates. Multiplications are counted per output timestep with the
// ledger: matrix-vector n*m, elementwise vector product n, scalar-times-
// vector n; additions and activations are free. Encoder costs sum all layers
// and both directions per timestep; subnetwork totals cover the recurrent
// cells only (the embedding and the joint projections are reported
// separately and excluded from the totals).
int64_t count_params(const CellConfig& config);  // one direction of one layer
int64_t count_mults(const CellConfig& config);   // per timestep, one direction

struct ModelCost {
  int64_t encoder_params = 0;
  int64_t encoder_mults = 0;
  int64_t prediction_params = 0;
  int64_t prediction_mults = 0;

  int64_t total_params() const { return encoder_params + prediction_params; }
  int64_t total_mults() const { return encoder_mults + prediction_mults; }
};

ModelCost count_model(const TransducerConfig& config);

struct SubnetworkCost {
  std::string variant;
  std::string subnetwork;  // "encoder" | "prediction" | "full"
  int64_t params = 0;
  int64_t mults = 0;
  std::string percent_params;  // vs. the LSTM baseline at the same shape
  std::string percent_mults;
};

// "<1" below one percent, otherwise the nearest integer.
std::string format_percent(int64_t value, int64_t baseline);

// Cost rows for one model against an LSTM baseline of identical shape.
std::vector<SubnetworkCost> cost_report(const TransducerConfig& config);

// The reference configurations at full scale (6x640 encoder over
// 340-dimensional inputs, 1x768 prediction over a 10-dimensional embedding,
// 45-character vocabulary).
std::vector<SubnetworkCost> reference_cost_table();

struct TimingRow {
  std::string variant;
  int frames = 0;
  double mean_s = 0.0;
  double std_s = 0.0;
  int repeats = 0;
};

// Wall-clock greedy decoding per utterance length: one warm-up run is
// excluded, then `repeats` timed runs on seeded standard-normal features.
// Single-threaded; best-effort pinning to one logical processor. The output
// head is biased toward the blank symbol so every model under comparison
// produces the same (empty) transcript.
std::vector<TimingRow> time_decode(const TransducerModel& model,
                                   const std::vector<int>& lengths, int repeats,
                                   uint64_t seed, const std::string& variant_label);

// Convenience used by the timing comparison: init + blank-bias.
TransducerModel timing_model(const TransducerConfig& config, uint64_t seed);

void write_cost_csv(const std::vector<SubnetworkCost>& rows, const std::string& path,
                    const std::string& config_hash);
void write_timing_csv(const std::vector<TimingRow>& rows, const std::string& path,
                      const std::string& config_hash);

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace snnt
