// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "snnt/cells.hpp"
#include "snnt/checkpoint.hpp"
#include "snnt/graph.hpp"
#include "snnt/tensor.hpp"

namespace snnt {

// Encoder stack + prediction network + joint network. The encoder is a stack
// of bidirectional layers; the prediction network is an embedding followed
// by one recurrent cell; the joint projects both embeddings to a shared
// width, combines them with a Hadamard product, applies tanh and produces a
// log-probability row over vocab+1 symbols (blank is the last index).
struct TransducerConfig {
  int input_dim = 340;
  std::vector<CellConfig> encoder_layers;  // sizes filled by validate_and_wire()
  int embedding_dim = 10;
  CellConfig prediction;
  int vocab = 45;
  int joint_dim = 256;

  int blank_id() const { return vocab; }
  int encoder_output_dim() const {
    return 2 * encoder_layers.back().units;
  }

  // Fills the derived input sizes (layer i>0 sees 2*units of layer i-1, the
  // prediction cell sees the embedding) and validates every cell config.
  void validate_and_wire();
};

// Convenience builder: k identical bidirectional encoder layers of the named
// variant plus one prediction cell.
TransducerConfig make_transducer_config(const std::string& encoder_variant,
                                        int encoder_layers, int encoder_units,
                                        const std::string& prediction_variant,
                                        int prediction_units, int input_dim,
                                        int vocab, int embedding_dim = 10,
                                        int joint_dim = 256);

struct TransducerModel {
  TransducerConfig config;
  std::vector<std::array<CellParams, 2>> encoder;  // [layer][fwd|bwd]
  Tensor embedding;  // (vocab+1) x e
  CellParams prediction;
  Tensor enc_proj;   // d_j x 2*n_enc
  Tensor pred_proj;  // d_j x n_pred
  Tensor out_weight; // (vocab+1) x d_j
  Tensor out_bias;   // vocab+1

  static TransducerModel init(TransducerConfig config, uint64_t seed);

  // Every scalar actually instantiated, including embedding and joint.
  int64_t live_parameter_count() const;

  NamedTensors named_tensors() const;
  void load_named_tensors(const NamedTensors& tensors);
};

// Model parameters bound into a graph as named leaves.
struct BoundModel {
  const TransducerConfig* config = nullptr;
  std::vector<std::array<BoundCell, 2>> encoder;
  Value embedding;
  BoundCell prediction;
  Value enc_proj, pred_proj, out_weight, out_bias;
};

BoundModel bind_model(Graph& graph, const TransducerModel& model);

// Training-time regularisation knobs for the forward passes. Null pointer
// means inference (no dropout).
struct ForwardOpts {
  double input_dropout = 0.0;      // inputs of every encoder layer
  double embedding_dropout = 0.0;  // embedding output
  std::mt19937_64* rng = nullptr;
};

// Runs the full encoder stack; one output per frame, width 2*n_enc.
std::vector<Value> encode(Graph& graph, const BoundModel& model,
                          const Tensor& features, const ForwardOpts* train = nullptr);

struct PredState {
  CellState cell;
};

// Prediction network start: feeds the blank symbol from the zero state.
std::pair<Value, PredState> predict_start(Graph& graph, const BoundModel& model,
                                          const ForwardOpts* train = nullptr);

// Advances the prediction network by one emitted label in [0, vocab).
std::pair<Value, PredState> predict_step(Graph& graph, const BoundModel& model,
                                         const PredState& state, int label,
                                         const ForwardOpts* train = nullptr);

// Log-probability row over vocab+1 symbols for one (frame, prefix) pair.
Value joint(Graph& graph, const BoundModel& model, Value h_enc, Value h_pred);

// T x (U+1) grid of log-probability rows. `frames` and `prediction` are the
// outputs of encode() and of predict_start()/predict_step() over the target
// prefix. Rows are bit-identical to calling joint() pairwise; the builder
// just evaluates each projection once.
struct AlignmentLattice {
  int frames = 0;       // T
  int target_len = 0;   // U
  int vocab = 0;        // rows have vocab+1 entries, blank last
  std::vector<Value> rows;

  Value& at(int t, int u) { return rows[static_cast<size_t>(t) * (target_len + 1) + u]; }
  const Value& at(int t, int u) const {
    return rows[static_cast<size_t>(t) * (target_len + 1) + u];
  }
};

AlignmentLattice build_lattice(Graph& graph, const BoundModel& model,
                               const std::vector<Value>& frames,
                               const std::vector<Value>& prediction);

// Wraps a raw T x (U+1) x (vocab+1) grid of log-probabilities (row-major) as
// constant lattice rows, for oracles and tests.
AlignmentLattice lattice_from_values(Graph& graph, int frames, int target_len,
                                     int vocab, const std::vector<double>& grid);

// Enforces the row invariant: exp of every row sums to 1 within 1e-9.
void validate_lattice(const AlignmentLattice& lattice);

// Negative log-likelihood of the target labelling, marginalised over all
// monotone alignments via the forward recursion in log space. Differentiable
// through the lattice rows. Validates per-row normalisation (1e-9) and label
// range.
Value rnnt_loss(Graph& graph, const AlignmentLattice& lattice,
                const std::vector<int>& targets);

// Optional consistency check: runs the backward recursion as well and
// returns the largest absolute deviation between the total log-probability
// and any anti-diagonal cut's forward+backward mass.
double alignment_cut_gap(int frames, int target_len, int vocab,
                         const std::vector<double>& grid,
                         const std::vector<int>& targets);

}  // namespace snnt
