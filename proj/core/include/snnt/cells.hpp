// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "snnt/graph.hpp"
#include "snnt/tensor.hpp"

namespace snnt {

enum class CellVariant { LSTM, SSNU, SSNU_A, SSNU_O };

// Describes one recurrent layer: which matrices exist and the decay
// constants. Valid combinations are the seven sSNU rows plus LSTM; see
// variant_name() for the canonical spellings ("sSNU-a Ra" etc.).
struct CellConfig {
  CellVariant variant = CellVariant::SSNU;
  int input_size = 0;  // m
  int units = 0;       // n
  bool recurrent = false;             // H (and H_o for the output-modulated unit)
  bool axo_somatic_recurrent = false; // H_a present, threshold decay trainable per unit
  double membrane_decay = 0.9;   // d
  double threshold_decay = 0.9;  // rho (constant, or the init when trainable)
  double threshold_scale = 0.1;  // beta
  bool pin_output_gate = false;  // test hook: forces the modulation gate to 1

  void validate() const;  // throws ConfigError on an invalid combination
  std::string variant_name() const;
  bool threshold_decay_trainable() const { return axo_somatic_recurrent; }
};

// Parses "LSTM", "sSNU", "sSNU R", "sSNU-a", "sSNU-a R", "sSNU-a Ra",
// "sSNU-o", "sSNU-o R" into variant + flags (sizes left at zero).
CellConfig cell_config_from_name(const std::string& name);

// The trainable arrays of one cell. Holds exactly the tensors the variant
// row lists, nothing else.
struct CellParams {
  CellConfig config;
  std::map<std::string, Tensor> tensors;

  static CellParams init(const CellConfig& config, std::mt19937_64& rng);
  int64_t scalar_count() const;
  std::vector<std::string> names() const;
};

// Parameters of one cell bound into a graph as named leaves.
struct BoundCell {
  CellConfig config;
  std::map<std::string, Value> p;
  Value ones;  // cached all-ones vector of length n

  const Value& at(const std::string& name) const;
  bool has(const std::string& name) const { return p.count(name) != 0; }
};

BoundCell bind_cell(Graph& graph, const CellParams& params, const std::string& prefix);

// Per-sequence state. All vectors length n, zero at sequence start.
//   membrane   s
//   output     y (previous modulated output)
//   threshold  b (adaptive-threshold unit only)
//   raw_output unmodulated output driving the reset (output-modulated unit)
// The LSTM uses membrane for its cell state and output for its hidden state.
struct CellState {
  Value membrane;
  Value output;
  Value threshold;
  Value raw_output;
};

CellState initial_cell_state(Graph& graph, const CellConfig& config);

// One transition. Returns the step output and the successor state.
std::pair<Value, CellState> cell_step(Graph& graph, const BoundCell& cell,
                                      const CellState& state, Value x);

// Left-to-right unroll from the zero state.
std::vector<Value> run_layer(Graph& graph, const BoundCell& cell,
                             const std::vector<Value>& inputs);

// output[t] = concat(fwd_y[t], bwd_y[T-1-t]) where bwd runs on the reversed
// sequence. Both cells must have the same unit count.
std::vector<Value> run_bidirectional(Graph& graph, const BoundCell& fwd,
                                     const BoundCell& bwd,
                                     const std::vector<Value>& inputs);

}  // namespace snnt
